use super::{check_updates, ModelUpdate};
use crate::error::Result;
use crate::params::ParameterVector;

/// Coordinate-wise median; even counts average the two central values.
/// Sample counts are ignored.
pub fn comed(updates: &[ModelUpdate]) -> Result<ParameterVector> {
    let len = check_updates(updates)?;
    let n = updates.len();
    let mut column = vec![0.0; n];
    let mut out = Vec::with_capacity(len);
    for j in 0..len {
        for (slot, u) in column.iter_mut().zip(updates) {
            *slot = u.params[j];
        }
        column.sort_unstable_by(f64::total_cmp);
        let median = if n % 2 == 1 {
            column[n / 2]
        } else {
            (column[n / 2 - 1] + column[n / 2]) / 2.0
        };
        out.push(median);
    }
    ParameterVector::new(out)
}
