use super::{check_updates, ModelUpdate};
use crate::error::Result;
use crate::params::ParameterVector;

/// Sample-count weighted mean of the client parameters.
pub fn fedavg(updates: &[ModelUpdate]) -> Result<ParameterVector> {
    let weights: Vec<f64> = updates.iter().map(|u| u.sample_count as f64).collect();
    weighted_mean(updates, &weights)
}

/// `sum_i w_i theta_i / sum_i w_i`, accumulated as offsets from the first
/// update and clamped to the per-coordinate input range so that identical
/// inputs reproduce exactly and the result stays in the convex hull.
pub(crate) fn weighted_mean(updates: &[ModelUpdate], weights: &[f64]) -> Result<ParameterVector> {
    let len = check_updates(updates)?;
    let total: f64 = weights.iter().sum();
    let base = updates[0].params.as_slice();
    let mut out = base.to_vec();
    let mut lo = base.to_vec();
    let mut hi = base.to_vec();
    for (u, &w) in updates.iter().zip(weights).skip(1) {
        let share = w / total;
        for j in 0..len {
            let v = u.params[j];
            out[j] += share * (v - base[j]);
            lo[j] = lo[j].min(v);
            hi[j] = hi[j].max(v);
        }
    }
    for j in 0..len {
        out[j] = out[j].clamp(lo[j], hi[j]);
    }
    ParameterVector::new(out)
}
