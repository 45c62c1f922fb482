//! Server-side aggregation of client model updates.

mod afa;
mod comed;
mod fedavg;
mod krum;

pub use afa::{afa_round, filter_blocked, AfaConfig, AfaOutcome, ClientProfile, ReputationBook};
pub use comed::comed;
pub use fedavg::fedavg;
pub use krum::{krum_scores, mkrum, MkrumConfig, NeighborMode};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ParameterVector;

/// Parameters submitted by one client together with its training-set size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelUpdate {
    pub client_id: usize,
    pub params: ParameterVector,
    pub sample_count: usize,
}

impl ModelUpdate {
    pub fn new(client_id: usize, params: ParameterVector, sample_count: usize) -> Result<Self> {
        if sample_count == 0 {
            return Err(Error::invalid(format!("client {client_id} reported zero samples")));
        }
        if !params.is_finite() {
            return Err(Error::invalid(format!("client {client_id} sent non-finite parameters")));
        }
        Ok(Self {
            client_id,
            params,
            sample_count,
        })
    }
}

/// Nonempty, equal-length updates; returns the common length.
pub(crate) fn check_updates(updates: &[ModelUpdate]) -> Result<usize> {
    let first = updates
        .first()
        .ok_or_else(|| Error::invalid("no updates to aggregate"))?;
    let len = first.params.len();
    for u in updates {
        u.params.ensure_len(len)?;
    }
    Ok(len)
}
