//! Client misbehavior: label flipping before training and parameter noise
//! after it.

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::TabularDataset;
use crate::error::{Error, Result};
use crate::params::ParameterVector;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientBehavior {
    #[default]
    Honest,
    MaliciousLabelFlip {
        #[serde(default = "default_flip_fraction")]
        flip_fraction: f64,
    },
    FaultyNoise {
        #[serde(default = "default_noise_std")]
        noise_std: f64,
    },
}

fn default_flip_fraction() -> f64 {
    1.0
}

fn default_noise_std() -> f64 {
    1.0
}

impl ClientBehavior {
    pub fn malicious() -> Self {
        ClientBehavior::MaliciousLabelFlip {
            flip_fraction: default_flip_fraction(),
        }
    }

    pub fn faulty() -> Self {
        ClientBehavior::FaultyNoise {
            noise_std: default_noise_std(),
        }
    }

    pub fn is_honest(&self) -> bool {
        matches!(self, ClientBehavior::Honest)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ClientBehavior::Honest => Ok(()),
            ClientBehavior::MaliciousLabelFlip { flip_fraction } => {
                if flip_fraction > 0.0 && flip_fraction <= 1.0 {
                    Ok(())
                } else {
                    Err(Error::invalid(format!(
                        "flip fraction {flip_fraction} must lie in (0, 1]"
                    )))
                }
            }
            ClientBehavior::FaultyNoise { noise_std } => {
                if noise_std > 0.0 && noise_std.is_finite() {
                    Ok(())
                } else {
                    Err(Error::invalid(format!("noise std {noise_std} must be positive")))
                }
            }
        }
    }
}

/// Flips `y -> 1 - y` on a random sample of `ceil(fraction * n)` rows.
pub fn flip_labels<R: Rng + ?Sized>(
    data: &TabularDataset,
    fraction: f64,
    rng: &mut R,
) -> Result<TabularDataset> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid(format!(
            "flip fraction {fraction} must lie in (0, 1]"
        )));
    }
    let n = data.len();
    let count = ((fraction * n as f64).ceil() as usize).min(n);
    let mut labels = data.labels().to_vec();
    for i in sample(rng, n, count) {
        labels[i] = 1 - labels[i];
    }
    data.with_labels(labels)
}

/// Adds i.i.d. `N(0, noise_std^2)` noise to every component.
pub fn noise_params<R: Rng + ?Sized>(
    params: &ParameterVector,
    noise_std: f64,
    rng: &mut R,
) -> Result<ParameterVector> {
    let normal = Normal::new(0.0, noise_std)
        .ok()
        .filter(|_| noise_std > 0.0)
        .ok_or_else(|| Error::invalid(format!("noise std {noise_std} must be positive")))?;
    ParameterVector::new(
        params
            .iter()
            .map(|&v| v + normal.sample(&mut *rng))
            .collect(),
    )
}
