//! Adaptive federated averaging: similarity-based rejection of outlying
//! updates plus a per-client reputation that can block clients for good.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::fedavg::weighted_mean;
use super::{check_updates, ModelUpdate};
use crate::error::{Error, Result};
use crate::params::ParameterVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AfaConfig {
    /// Initial slack, in standard deviations, before an update is an outlier.
    pub xi: f64,
    /// Slack added after every pass that removed something.
    pub delta_xi: f64,
    /// Clients whose reputation drops below this are blocked.
    pub block_threshold: f64,
    pub alpha0: f64,
    pub beta0: f64,
}

impl Default for AfaConfig {
    fn default() -> Self {
        Self {
            xi: 2.0,
            delta_xi: 0.5,
            block_threshold: 0.25,
            alpha0: 3.0,
            beta0: 3.0,
        }
    }
}

impl AfaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.xi > 0.0) || !(self.delta_xi >= 0.0) {
            return Err(Error::invalid("afa needs xi > 0 and delta_xi >= 0"));
        }
        if !(self.block_threshold > 0.0 && self.block_threshold < 1.0) {
            return Err(Error::invalid("block threshold must lie in (0, 1)"));
        }
        if !(self.alpha0 > 0.0 && self.beta0 > 0.0) {
            return Err(Error::invalid("reputation priors must be positive"));
        }
        Ok(())
    }
}

/// Beta-Bernoulli reputation of one client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientProfile {
    pub client_id: usize,
    pub alpha: f64,
    pub beta: f64,
    pub blocked: bool,
}

impl ClientProfile {
    pub fn new(client_id: usize, cfg: &AfaConfig) -> Self {
        Self {
            client_id,
            alpha: cfg.alpha0,
            beta: cfg.beta0,
            blocked: false,
        }
    }

    /// Posterior mean probability of sending a good update.
    pub fn reputation(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }

    /// Records one round's verdict; returns true if this blocks the client.
    pub fn record(&mut self, accepted: bool, block_threshold: f64) -> bool {
        if accepted {
            self.alpha += 1.0;
        } else {
            self.beta += 1.0;
        }
        if !self.blocked && self.reputation() < block_threshold {
            self.blocked = true;
            return true;
        }
        false
    }
}

/// Reputation state for every client of a simulation.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReputationBook {
    profiles: BTreeMap<usize, ClientProfile>,
}

impl ReputationBook {
    pub fn new(client_ids: impl IntoIterator<Item = usize>, cfg: &AfaConfig) -> Self {
        Self {
            profiles: client_ids
                .into_iter()
                .map(|id| (id, ClientProfile::new(id, cfg)))
                .collect(),
        }
    }

    pub fn get(&self, client_id: usize) -> Option<&ClientProfile> {
        self.profiles.get(&client_id)
    }

    pub fn is_blocked(&self, client_id: usize) -> bool {
        self.profiles.get(&client_id).is_some_and(|p| p.blocked)
    }

    pub fn blocked(&self) -> BTreeSet<usize> {
        self.profiles
            .values()
            .filter(|p| p.blocked)
            .map(|p| p.client_id)
            .collect()
    }

    pub fn profiles(&self) -> impl Iterator<Item = &ClientProfile> {
        self.profiles.values()
    }

    fn profile_mut(&mut self, client_id: usize, cfg: &AfaConfig) -> &mut ClientProfile {
        self.profiles
            .entry(client_id)
            .or_insert_with(|| ClientProfile::new(client_id, cfg))
    }
}

/// Drops updates from blocked clients.
pub fn filter_blocked(updates: Vec<ModelUpdate>, book: &ReputationBook) -> Vec<ModelUpdate> {
    updates
        .into_iter()
        .filter(|u| !book.is_blocked(u.client_id))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AfaOutcome {
    pub global: ParameterVector,
    pub accepted: BTreeSet<usize>,
    pub rejected: BTreeSet<usize>,
    pub newly_blocked: BTreeSet<usize>,
    /// Set when every update looked like an outlier and only the most
    /// similar one was kept.
    pub degenerate: bool,
}

fn cosine(a: &ParameterVector, b: &ParameterVector) -> f64 {
    let denom = a.norm() * b.norm();
    if denom == 0.0 {
        0.0
    } else {
        a.dot(b) / denom
    }
}

fn mean_median_std(values: &[f64]) -> (f64, f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let m = sorted.len();
    let median = if m % 2 == 1 {
        sorted[m / 2]
    } else {
        (sorted[m / 2 - 1] + sorted[m / 2]) / 2.0
    };
    (mean, median, var.sqrt())
}

/// One AFA aggregation round.
///
/// Repeatedly aggregates the surviving updates with weights proportional
/// to `reputation * sample_count`, scores each survivor by cosine
/// similarity to that aggregate, and removes the one-sided tail beyond
/// `xi` standard deviations from the median (the low tail when the mean
/// sits below the median, the high tail otherwise), widening `xi` after
/// each removal. Survivors gain reputation, the rest lose it.
pub fn afa_round(
    updates: &[ModelUpdate],
    previous_global: &ParameterVector,
    book: &mut ReputationBook,
    cfg: &AfaConfig,
) -> Result<AfaOutcome> {
    cfg.validate()?;
    let len = check_updates(updates)?;
    previous_global.ensure_len(len)?;
    if let Some(u) = updates.iter().find(|u| book.is_blocked(u.client_id)) {
        return Err(Error::invalid(format!(
            "update from blocked client {}",
            u.client_id
        )));
    }

    let reputation = |u: &ModelUpdate, book: &ReputationBook| {
        book.get(u.client_id)
            .map_or(cfg.alpha0 / (cfg.alpha0 + cfg.beta0), ClientProfile::reputation)
    };
    let weights: Vec<f64> = updates
        .iter()
        .map(|u| reputation(u, book) * u.sample_count as f64)
        .collect();
    let aggregate = |keep: &[usize]| {
        let chosen: Vec<ModelUpdate> = keep.iter().map(|&i| updates[i].clone()).collect();
        let w: Vec<f64> = keep.iter().map(|&i| weights[i]).collect();
        weighted_mean(&chosen, &w)
    };

    let mut good: Vec<usize> = (0..updates.len()).collect();
    let mut xi = cfg.xi;
    let mut degenerate = false;
    loop {
        let candidate = aggregate(&good)?;
        let sims: Vec<f64> = good
            .iter()
            .map(|&i| cosine(&updates[i].params, &candidate))
            .collect();
        let (mean, median, std) = mean_median_std(&sims);
        let outlier = |s: f64| {
            if mean < median {
                s < median - xi * std
            } else {
                s > median + xi * std
            }
        };
        let keep: Vec<usize> = good
            .iter()
            .zip(&sims)
            .filter(|&(_, &s)| !outlier(s))
            .map(|(&i, _)| i)
            .collect();
        if keep.len() == good.len() {
            break;
        }
        if keep.is_empty() {
            let best = good
                .iter()
                .zip(&sims)
                .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(a.0)))
                .map(|(&i, _)| i)
                .expect("nonempty");
            good = vec![best];
            degenerate = true;
            break;
        }
        good = keep;
        xi += cfg.delta_xi;
    }

    let global = aggregate(&good)?;
    let accepted: BTreeSet<usize> = good.iter().map(|&i| updates[i].client_id).collect();
    let rejected: BTreeSet<usize> = updates
        .iter()
        .map(|u| u.client_id)
        .filter(|id| !accepted.contains(id))
        .collect();
    let mut newly_blocked = BTreeSet::new();
    for u in updates {
        let ok = accepted.contains(&u.client_id);
        if book
            .profile_mut(u.client_id, cfg)
            .record(ok, cfg.block_threshold)
        {
            newly_blocked.insert(u.client_id);
        }
    }
    Ok(AfaOutcome {
        global,
        accepted,
        rejected,
        newly_blocked,
        degenerate,
    })
}
