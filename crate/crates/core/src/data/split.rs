use ndarray::{Array1, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::TabularDataset;
use crate::error::{Error, Result};

fn shuffled(n: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order
}

/// Seeded shuffle, then the first `train_count` rows become the training
/// set and the next `test_count` rows (all remaining rows when `None`)
/// the test set. Rows beyond both are left unused.
pub fn split(
    data: &TabularDataset,
    train_count: usize,
    test_count: Option<usize>,
    seed: u64,
) -> Result<(TabularDataset, TabularDataset)> {
    let n = data.len();
    if train_count == 0 || train_count >= n {
        return Err(Error::invalid(format!(
            "train count {train_count} must lie in 1..{n}"
        )));
    }
    let test_count = test_count.unwrap_or(n - train_count);
    if test_count == 0 || train_count + test_count > n {
        return Err(Error::invalid(format!(
            "test count {test_count} does not fit beside {train_count} training rows in {n}"
        )));
    }
    let order = shuffled(n, seed);
    let train = data.select_rows(&order[..train_count]);
    let test = data.select_rows(&order[train_count..train_count + test_count]);
    Ok((train, test))
}

/// Client partition sizes; their sum must equal the training row count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionPlan {
    pub client_sizes: Vec<usize>,
    pub seed: u64,
}

impl PartitionPlan {
    pub fn total(&self) -> usize {
        self.client_sizes.iter().sum()
    }

    /// Near-equal sizes; the remainder goes one row each to the last clients.
    pub fn equal(rows: usize, clients: usize, seed: u64) -> Result<Self> {
        if clients == 0 || clients > rows {
            return Err(Error::invalid(format!(
                "cannot split {rows} rows across {clients} clients"
            )));
        }
        let base = rows / clients;
        let extra = rows % clients;
        let client_sizes = (0..clients)
            .map(|i| base + usize::from(i >= clients - extra))
            .collect();
        Ok(Self { client_sizes, seed })
    }
}

/// Seeded shuffle of the training rows, then contiguous slices of the
/// planned sizes, one per client.
pub fn partition(train: &TabularDataset, plan: &PartitionPlan) -> Result<Vec<TabularDataset>> {
    if plan.client_sizes.is_empty() || plan.client_sizes.contains(&0) {
        return Err(Error::invalid("every client needs at least one row"));
    }
    if plan.total() != train.len() {
        return Err(Error::invalid(format!(
            "partition sizes sum to {} but the training set has {} rows",
            plan.total(),
            train.len()
        )));
    }
    let order = shuffled(train.len(), plan.seed);
    let mut start = 0;
    Ok(plan
        .client_sizes
        .iter()
        .map(|&size| {
            let part = train.select_rows(&order[start..start + size]);
            start += size;
            part
        })
        .collect())
}

/// Per-column mean and population standard deviation of a training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormalizationStats {
    pub fn fit(train: &TabularDataset) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::invalid("cannot normalize with an empty training set"));
        }
        let x = train.features();
        let mean = x.mean_axis(Axis(0)).expect("nonempty");
        let std = x.std_axis(Axis(0), 0.0);
        Ok(Self {
            mean: mean.to_vec(),
            std: std.to_vec(),
        })
    }

    /// z-scores `data`; zero-variance columns become 0.
    pub fn apply(&self, data: &TabularDataset) -> Result<TabularDataset> {
        if data.n_features() != self.mean.len() {
            return Err(Error::shape(self.mean.len(), data.n_features()));
        }
        let mean = Array1::from(self.mean.clone());
        let mut x = data.features() - &mean;
        for (mut col, &sd) in x.columns_mut().into_iter().zip(&self.std) {
            if sd > 0.0 {
                col.mapv_inplace(|v| v / sd);
            } else {
                col.fill(0.0);
            }
        }
        data.with_features(x)
    }
}

/// z-scores `train` and `test` using statistics from `train` only.
pub fn normalize(
    train: &TabularDataset,
    test: &TabularDataset,
) -> Result<(TabularDataset, TabularDataset, NormalizationStats)> {
    let stats = NormalizationStats::fit(train)?;
    Ok((stats.apply(train)?, stats.apply(test)?, stats))
}
