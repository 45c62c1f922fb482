//! Client-side sparse parameter release under the sparse vector technique.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::params::ParameterVector;

/// Inverse-CDF transform of a uniform draw `u` in (0, 1) into Laplace(0, scale).
pub fn laplace_from_uniform(u: f64, scale: f64) -> f64 {
    let centered = u - 0.5;
    -scale * centered.signum() * (1.0 - 2.0 * centered.abs()).ln()
}

/// One draw from Laplace(0, scale).
pub fn laplace_sample<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> Result<f64> {
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::invalid(format!("laplace scale must be positive, got {scale}")));
    }
    // u = 0 maps to an infinite draw; reject it.
    let u = loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            break u;
        }
    };
    Ok(laplace_from_uniform(u, scale))
}

/// Componentwise clamp to `[-gamma, gamma]`.
pub fn clip(delta: &ParameterVector, gamma: f64) -> Result<ParameterVector> {
    if !(gamma > 0.0) {
        return Err(Error::invalid("clipping threshold must be positive"));
    }
    Ok(ParameterVector::from_vec_unchecked(
        delta.iter().map(|x| x.clamp(-gamma, gamma)).collect(),
    ))
}

/// A privacy budget; `Infinite` disables the matching noise term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Epsilon {
    Finite(f64),
    Infinite,
}

impl Epsilon {
    /// Laplace scale `numerator / epsilon`, or `None` when noiseless.
    fn noise_scale(self, numerator: f64) -> Option<f64> {
        match self {
            Epsilon::Finite(eps) => Some(numerator / eps),
            Epsilon::Infinite => None,
        }
    }

    fn is_infinite(self) -> bool {
        matches!(self, Epsilon::Infinite)
    }
}

impl fmt::Display for Epsilon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Epsilon::Finite(v) => write!(f, "{v}"),
            Epsilon::Infinite => f.write_str("infinite"),
        }
    }
}

impl Serialize for Epsilon {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Epsilon::Finite(v) => s.serialize_f64(*v),
            Epsilon::Infinite => s.serialize_str("infinite"),
        }
    }
}

impl<'de> Deserialize<'de> for Epsilon {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) if v > 0.0 && v.is_finite() => Ok(Epsilon::Finite(v)),
            Raw::Num(v) if v == f64::INFINITY => Ok(Epsilon::Infinite),
            Raw::Text(t) if t == "infinite" || t == "inf" => Ok(Epsilon::Infinite),
            Raw::Num(v) => Err(serde::de::Error::custom(format!(
                "epsilon must be positive, got {v}"
            ))),
            Raw::Text(t) => Err(serde::de::Error::custom(format!(
                "expected a positive number or \"infinite\", got {t:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DpConfig {
    /// Clipping threshold for parameter deltas.
    pub gamma: f64,
    /// Per-component sensitivity; defaults to `2 * gamma` when absent.
    #[serde(default)]
    pub sensitivity: Option<f64>,
    /// Fraction of parameters released per round.
    pub release_fraction: f64,
    /// Budget for the per-parameter selection noise.
    pub epsilon1: Epsilon,
    /// Budget for the threshold noise.
    pub epsilon2: Epsilon,
    /// Budget for the noise on released values.
    pub epsilon3: Epsilon,
}

impl DpConfig {
    pub fn noiseless(gamma: f64, release_fraction: f64) -> Self {
        Self {
            gamma,
            sensitivity: None,
            release_fraction,
            epsilon1: Epsilon::Infinite,
            epsilon2: Epsilon::Infinite,
            epsilon3: Epsilon::Infinite,
        }
    }

    pub fn sensitivity(&self) -> f64 {
        self.sensitivity.unwrap_or(2.0 * self.gamma)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::invalid("gamma must be positive"));
        }
        if !(self.sensitivity() > 0.0) || !self.sensitivity().is_finite() {
            return Err(Error::invalid("sensitivity must be positive"));
        }
        if !(self.release_fraction > 0.0 && self.release_fraction <= 1.0) {
            return Err(Error::invalid("release fraction must lie in (0, 1]"));
        }
        for eps in [self.epsilon1, self.epsilon2, self.epsilon3] {
            if let Epsilon::Finite(v) = eps {
                if !(v > 0.0) || !v.is_finite() {
                    return Err(Error::invalid("epsilons must be positive"));
                }
            }
        }
        Ok(())
    }

    /// Number of components released out of `len`: `ceil(Q * len)`.
    pub fn release_count(&self, len: usize) -> usize {
        ((self.release_fraction * len as f64).ceil() as usize).min(len)
    }
}

/// Released deltas at a subset of parameter positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseUpdate {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
    pub total_length: usize,
}

impl SparseUpdate {
    /// Server-side reconstruction: `global_ref` plus released deltas.
    pub fn densify(&self, global_ref: &ParameterVector) -> Result<ParameterVector> {
        global_ref.ensure_len(self.total_length)?;
        let mut out = global_ref.as_slice().to_vec();
        for (&i, &v) in self.indices.iter().zip(&self.values) {
            out[i] += v;
        }
        ParameterVector::new(out)
    }
}

/// `q`-quantile with linear interpolation between order statistics.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Clips the delta `local - global_ref`, selects about `Q` of its
/// components with noisy threshold tests and releases them with Laplace
/// noise, re-clipped to `[-gamma, gamma]`.
///
/// Noise scales are `2 c s / epsilon_k` with `c` the release count. When
/// both selection budgets are infinite the selection is the exact top-`c`
/// components by magnitude (ties to the lower index).
pub fn dp_release<R: Rng + ?Sized>(
    local: &ParameterVector,
    global_ref: &ParameterVector,
    cfg: &DpConfig,
    rng: &mut R,
) -> Result<SparseUpdate> {
    cfg.validate()?;
    let delta = clip(&local.sub(global_ref)?, cfg.gamma)?;
    let len = delta.len();
    let count = cfg.release_count(len);
    let numerator = 2.0 * count as f64 * cfg.sensitivity();

    let mut indices = if cfg.epsilon1.is_infinite() && cfg.epsilon2.is_infinite() {
        top_by_magnitude(&delta, count)
    } else {
        let mut magnitudes: Vec<f64> = delta.iter().map(|v| v.abs()).collect();
        magnitudes.sort_by(f64::total_cmp);
        let tau = if len == 0 {
            0.0
        } else {
            quantile(&magnitudes, 1.0 - cfg.release_fraction)
        };
        let threshold = tau + draw(cfg.epsilon2.noise_scale(numerator), rng)?;
        let query_scale = cfg.epsilon1.noise_scale(numerator);
        let mut order: Vec<usize> = (0..len).collect();
        order.shuffle(rng);
        let mut accepted = Vec::with_capacity(count);
        for j in order {
            if accepted.len() == count {
                break;
            }
            if delta[j].abs() + draw(query_scale, rng)? >= threshold {
                accepted.push(j);
            }
        }
        accepted
    };
    indices.sort_unstable();

    let value_scale = cfg.epsilon3.noise_scale(numerator);
    let mut values = Vec::with_capacity(indices.len());
    for &j in &indices {
        let noisy = delta[j] + draw(value_scale, rng)?;
        values.push(noisy.clamp(-cfg.gamma, cfg.gamma));
    }
    Ok(SparseUpdate {
        indices,
        values,
        total_length: len,
    })
}

fn draw<R: Rng + ?Sized>(scale: Option<f64>, rng: &mut R) -> Result<f64> {
    match scale {
        Some(b) => laplace_sample(b, rng),
        None => Ok(0.0),
    }
}

fn top_by_magnitude(delta: &[f64], count: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..delta.len()).collect();
    order.sort_by(|&a, &b| delta[b].abs().total_cmp(&delta[a].abs()).then(a.cmp(&b)));
    order.truncate(count);
    order
}
