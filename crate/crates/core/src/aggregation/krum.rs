use serde::{Deserialize, Serialize};

use super::fedavg::fedavg;
use super::{check_updates, ModelUpdate};
use crate::error::{Error, Result};
use crate::params::ParameterVector;

/// Which distances enter a client's Krum score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NeighborMode {
    /// Sum over every other client.
    #[default]
    AllPairs,
    /// Sum over the `n - f - 2` nearest clients.
    Truncated,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MkrumConfig {
    /// Number of updates kept; `n - assumed_byzantine` when unset.
    #[serde(default)]
    pub m: Option<usize>,
    /// Number of bad clients the server plans for.
    #[serde(default)]
    pub assumed_byzantine: usize,
    #[serde(default)]
    pub neighbor_mode: NeighborMode,
}

impl MkrumConfig {
    pub fn selection_size(&self, n: usize) -> usize {
        self.m.unwrap_or_else(|| n.saturating_sub(self.assumed_byzantine).max(1))
    }
}

/// Sum of squared Euclidean distances from each update to the others,
/// returned in input order as `(client_id, score)`.
pub fn krum_scores(updates: &[ModelUpdate], mode: NeighborMode, f: usize) -> Result<Vec<(usize, f64)>> {
    check_updates(updates)?;
    let n = updates.len();
    if n < 2 {
        return Err(Error::invalid("krum needs at least two updates"));
    }
    let neighbours = match mode {
        NeighborMode::AllPairs => n - 1,
        NeighborMode::Truncated => {
            if n < f + 3 {
                return Err(Error::invalid(format!(
                    "truncated krum needs n - f - 2 >= 1 (n = {n}, f = {f})"
                )));
            }
            n - f - 2
        }
    };

    let mut dist = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = updates[i].params.squared_distance(&updates[j].params);
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }
    Ok(dist
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut others: Vec<f64> = row
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &d)| d)
                .collect();
            if neighbours < others.len() {
                others.sort_unstable_by(f64::total_cmp);
                others.truncate(neighbours);
            }
            (updates[i].client_id, others.iter().sum())
        })
        .collect())
}

/// Multi-Krum: keep the `m` lowest-scoring updates (ties to the lower
/// client id) and average them with FedAvg. Returns the aggregate and the
/// selected client ids in selection order.
pub fn mkrum(updates: &[ModelUpdate], cfg: &MkrumConfig) -> Result<(ParameterVector, Vec<usize>)> {
    check_updates(updates)?;
    let n = updates.len();
    let m = cfg.selection_size(n);
    if m == 0 || m > n {
        return Err(Error::invalid(format!("m = {m} must lie in 1..={n}")));
    }
    if n == 1 {
        return Ok((updates[0].params.clone(), vec![updates[0].client_id]));
    }
    let scores = krum_scores(updates, cfg.neighbor_mode, cfg.assumed_byzantine)?;
    let mut ranked: Vec<usize> = (0..n).collect();
    ranked.sort_by(|&a, &b| {
        scores[a]
            .1
            .total_cmp(&scores[b].1)
            .then(updates[a].client_id.cmp(&updates[b].client_id))
    });
    ranked.truncate(m);
    let selected_ids = ranked.iter().map(|&i| updates[i].client_id).collect();
    // Aggregate in input order so m = n reproduces FedAvg bit for bit.
    ranked.sort_unstable();
    let chosen: Vec<ModelUpdate> = ranked.iter().map(|&i| updates[i].clone()).collect();
    Ok((fedavg(&chosen)?, selected_ids))
}
