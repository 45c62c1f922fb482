//! The two experiment layouts and the declarative config file on top of
//! them.

mod config_file;

pub use config_file::{load_config, parse_config, ConfigFile};

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::adversary::ClientBehavior;
use crate::aggregation::{AfaConfig, MkrumConfig};
use crate::error::{Error, Result};
use crate::privacy::{DpConfig, Epsilon, KAnonConfig};
use crate::sim::{DatasetKind, PrivacyMode, SimulationConfig, Strategy};

/// Clipping threshold used by the DP presets. Honest deltas after one
/// round of local training stay well inside it at both learning rates.
pub const PRESET_DP_GAMMA: f64 = 0.01;
pub const PRESET_DP_RELEASE_FRACTION: f64 = 0.1;
pub const PRESET_DP_EPSILON: f64 = 1e-4;
pub const PRESET_KANON_K: usize = 4;

macro_rules! string_enum {
    ($name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $text)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.pad(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => Err(Error::Config(format!(
                        "unknown {} {other:?} (expected one of: {})",
                        stringify!($name),
                        [$($text),+].join(", ")
                    ))),
                }
            }
        }
    };
}

string_enum!(PresetName { Exp1 => "exp1", Exp2 => "exp2" });
string_enum!(Variant { Clean => "clean", BadClients => "bad_clients" });
string_enum!(PrivacyVariant { None => "none", Dp => "dp", Kanon => "kanon" });

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExperimentPreset {
    pub name: PresetName,
    pub variant: Variant,
    pub privacy: PrivacyVariant,
}

impl ExperimentPreset {
    pub fn new(name: PresetName, variant: Variant, privacy: PrivacyVariant) -> Self {
        Self {
            name,
            variant,
            privacy,
        }
    }

    pub fn dataset(&self) -> DatasetKind {
        match self.name {
            PresetName::Exp1 => DatasetKind::Pima,
            PresetName::Exp2 => DatasetKind::Heart,
        }
    }

    /// Client ids that misbehave in the bad-clients variant.
    pub fn bad_clients(&self) -> BTreeMap<usize, ClientBehavior> {
        let mut map = BTreeMap::new();
        if self.variant == Variant::BadClients {
            map.insert(1, ClientBehavior::faulty());
            map.insert(2, ClientBehavior::malicious());
            if self.name == PresetName::Exp1 {
                map.insert(4, ClientBehavior::malicious());
            }
        }
        map
    }

    pub fn privacy_mode(&self) -> PrivacyMode {
        match self.privacy {
            PrivacyVariant::None => PrivacyMode::None,
            PrivacyVariant::Dp => PrivacyMode::Dp(DpConfig {
                gamma: PRESET_DP_GAMMA,
                sensitivity: None,
                release_fraction: PRESET_DP_RELEASE_FRACTION,
                epsilon1: Epsilon::Finite(PRESET_DP_EPSILON),
                epsilon2: Epsilon::Finite(PRESET_DP_EPSILON),
                epsilon3: Epsilon::Finite(PRESET_DP_EPSILON),
            }),
            PrivacyVariant::Kanon => PrivacyMode::Kanon(KAnonConfig {
                k: PRESET_KANON_K,
                quasi_identifiers: self.dataset().quasi_identifiers(),
            }),
        }
    }

    /// Fully resolved configuration for one strategy.
    pub fn resolve(&self, strategy: Strategy, master_seed: u64, data_dir: &Path) -> SimulationConfig {
        let dataset = self.dataset();
        let (train_count, test_count, client_sizes, widths, epochs, rounds, lr, batch, assumed) = match self.name {
            PresetName::Exp1 => (
                614,
                154,
                vec![39, 39, 39, 59, 59, 59, 80, 80, 80, 80],
                vec![200, 200, 2],
                5,
                50,
                1e-5,
                10,
                3,
            ),
            PresetName::Exp2 => (
                207,
                46,
                vec![41, 41, 41, 42, 42],
                vec![32, 16, 2],
                10,
                100,
                1e-4,
                5,
                2,
            ),
        };
        SimulationConfig {
            dataset,
            data_path: data_dir.join(dataset.file_name()),
            train_count,
            test_count: Some(test_count),
            normalize: true,
            rounds,
            local_epochs: epochs,
            batch_size: batch,
            learning_rate: lr,
            model_widths: widths,
            client_sizes,
            strategy,
            mkrum: MkrumConfig {
                assumed_byzantine: assumed,
                ..MkrumConfig::default()
            },
            afa: AfaConfig::default(),
            behaviors: self.bad_clients(),
            privacy: self.privacy_mode(),
            master_seed,
            parallel_clients: false,
        }
    }
}
