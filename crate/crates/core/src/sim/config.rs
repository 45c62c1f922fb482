use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::adversary::ClientBehavior;
use crate::aggregation::{AfaConfig, MkrumConfig};
use crate::data::{self, TabularDataset};
use crate::error::{Error, Result};
use crate::privacy::{DpConfig, KAnonConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    Pima,
    Heart,
}

impl DatasetKind {
    pub fn file_name(self) -> &'static str {
        match self {
            DatasetKind::Pima => "pima.csv",
            DatasetKind::Heart => "heart.csv",
        }
    }

    pub fn quasi_identifiers(self) -> Vec<String> {
        let cols: &[&str] = match self {
            DatasetKind::Pima => &data::PIMA_QUASI_IDENTIFIERS,
            DatasetKind::Heart => &data::HEART_QUASI_IDENTIFIERS,
        };
        cols.iter().map(|c| c.to_string()).collect()
    }

    pub fn load(self, path: impl AsRef<Path>) -> Result<TabularDataset> {
        match self {
            DatasetKind::Pima => data::load_pima(path),
            DatasetKind::Heart => data::load_heart(path),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Fedavg,
    Comed,
    Mkrum,
    Afa,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::Fedavg, Strategy::Comed, Strategy::Mkrum, Strategy::Afa];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Fedavg => "fedavg",
            Strategy::Comed => "comed",
            Strategy::Mkrum => "mkrum",
            Strategy::Afa => "afa",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fedavg" | "fa" => Ok(Strategy::Fedavg),
            "comed" => Ok(Strategy::Comed),
            "mkrum" => Ok(Strategy::Mkrum),
            "afa" => Ok(Strategy::Afa),
            other => Err(Error::invalid(format!(
                "unknown strategy {other:?} (expected fedavg, comed, mkrum or afa)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrivacyMode {
    #[default]
    None,
    Dp(DpConfig),
    Kanon(KAnonConfig),
}

/// Everything needed to reproduce one simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub dataset: DatasetKind,
    pub data_path: PathBuf,
    pub train_count: usize,
    /// Test rows after the training rows; all remaining rows when absent.
    pub test_count: Option<usize>,
    /// z-score features with statistics from the clients' training data.
    pub normalize: bool,
    pub rounds: usize,
    pub local_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Hidden and output layer widths; the input width comes from the data.
    pub model_widths: Vec<usize>,
    /// Rows per client; client ids are 1-based positions in this list.
    pub client_sizes: Vec<usize>,
    pub strategy: Strategy,
    pub mkrum: MkrumConfig,
    pub afa: AfaConfig,
    /// Misbehaving clients by 1-based id; absent clients are honest.
    pub behaviors: BTreeMap<usize, ClientBehavior>,
    pub privacy: PrivacyMode,
    pub master_seed: u64,
    /// Train clients on the rayon pool; results are identical either way.
    #[serde(default)]
    pub parallel_clients: bool,
}

impl SimulationConfig {
    pub fn client_count(&self) -> usize {
        self.client_sizes.len()
    }

    pub fn client_ids(&self) -> impl Iterator<Item = usize> {
        1..=self.client_sizes.len()
    }

    pub fn behavior(&self, client_id: usize) -> ClientBehavior {
        self.behaviors.get(&client_id).copied().unwrap_or_default()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.rounds == 0 {
            return bad("rounds must be at least 1".into());
        }
        if self.local_epochs == 0 || self.batch_size == 0 {
            return bad("local_epochs and batch_size must be at least 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate {} must be positive", self.learning_rate));
        }
        if self.model_widths.is_empty() || self.model_widths.contains(&0) {
            return bad("model_widths must be nonempty and positive".into());
        }
        if self.model_widths.last() != Some(&2) {
            return bad("the output layer must have width 2".into());
        }
        if self.client_sizes.is_empty() || self.client_sizes.contains(&0) {
            return bad("every client needs at least one row".into());
        }
        let total: usize = self.client_sizes.iter().sum();
        if total != self.train_count {
            return bad(format!(
                "client sizes sum to {total} but train_count is {}",
                self.train_count
            ));
        }
        for (&id, behavior) in &self.behaviors {
            if id == 0 || id > self.client_count() {
                return bad(format!(
                    "behavior for client {id}, but clients are 1..={}",
                    self.client_count()
                ));
            }
            behavior.validate()?;
        }
        self.afa.validate()?;
        match &self.privacy {
            PrivacyMode::None => {}
            PrivacyMode::Dp(dp) => dp.validate()?,
            PrivacyMode::Kanon(k) => {
                if k.k == 0 {
                    return bad("k must be at least 1".into());
                }
                if k.quasi_identifiers.is_empty() {
                    return bad("k-anonymity needs at least one quasi-identifier".into());
                }
            }
        }
        Ok(())
    }
}
