use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Strategy;
use crate::params::ParameterVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClientStatus {
    Accepted,
    Rejected,
    /// Blocked during this round.
    Blocked,
    /// Blocked in an earlier round and no longer contacted.
    NotContacted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockEvent {
    pub round: usize,
    pub client_id: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundMetrics {
    pub round: usize,
    pub test_error: f64,
    pub test_loss: f64,
    pub statuses: BTreeMap<usize, ClientStatus>,
    /// Clients blocked during this round.
    pub block_events: Vec<BlockEvent>,
}

impl RoundMetrics {
    fn ids(&self, keep: impl Fn(ClientStatus) -> bool) -> Vec<usize> {
        self.statuses
            .iter()
            .filter(|(_, &s)| keep(s))
            .map(|(&id, _)| id)
            .collect()
    }

    pub fn accepted_ids(&self) -> Vec<usize> {
        self.ids(|s| s == ClientStatus::Accepted)
    }

    pub fn rejected_ids(&self) -> Vec<usize> {
        self.ids(|s| s == ClientStatus::Rejected)
    }

    /// Every client blocked so far, including during this round.
    pub fn blocked_ids(&self) -> Vec<usize> {
        self.ids(|s| matches!(s, ClientStatus::Blocked | ClientStatus::NotContacted))
    }
}

/// Why a run stopped before its round budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerminalEvent {
    pub round: usize,
    pub reason: String,
}

/// Facts about the data preparation recorded alongside the metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub total_rows: usize,
    pub train_rows: usize,
    pub test_rows: usize,
    /// Rows left out of both the training and the test split.
    pub unused_rows: usize,
    pub client_rows: Vec<usize>,
    pub param_count: usize,
    /// Test error of always predicting the training majority class.
    pub majority_baseline_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub strategy: Strategy,
    pub metrics: Vec<RoundMetrics>,
    pub terminal: Option<TerminalEvent>,
    pub metadata: RunMetadata,
    pub final_global: ParameterVector,
}

impl RunOutcome {
    pub fn block_events(&self) -> Vec<BlockEvent> {
        self.metrics
            .iter()
            .flat_map(|m| m.block_events.iter().copied())
            .collect()
    }

    pub fn final_error(&self) -> Option<f64> {
        self.metrics.last().map(|m| m.test_error)
    }
}
