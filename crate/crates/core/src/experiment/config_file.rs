use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::{ExperimentPreset, PresetName, PrivacyVariant, Variant};
use crate::adversary::ClientBehavior;
use crate::aggregation::NeighborMode;
use crate::error::{Error, Result};
use crate::privacy::Epsilon;
use crate::sim::{PrivacyMode, SimulationConfig, Strategy};

/// Parsed config file: a required `[preset]` section plus optional
/// sections whose keys override the preset.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub preset: PresetSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub data: DataSection,
    #[serde(default)]
    pub training: TrainingSection,
    pub adversary: Option<AdversarySection>,
    pub dp: Option<DpSection>,
    pub kanon: Option<KanonSection>,
    #[serde(default)]
    pub mkrum: MkrumSection,
    #[serde(default)]
    pub afa: AfaSection,
    /// Directory that relative paths in the file are resolved against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetSection {
    pub name: PresetName,
    pub variant: Option<Variant>,
    pub privacy: Option<PrivacyVariant>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub strategies: Option<Vec<Strategy>>,
    pub seed: Option<u64>,
    pub parallel_clients: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub dir: Option<PathBuf>,
    pub path: Option<PathBuf>,
    pub train_count: Option<usize>,
    pub test_count: Option<usize>,
    pub normalize: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSection {
    pub rounds: Option<usize>,
    pub local_epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub model_widths: Option<Vec<usize>>,
    pub client_sizes: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversarySection {
    /// Replaces the preset's behaviors; keys are 1-based client ids.
    #[serde(default)]
    pub behaviors: BTreeMap<String, ClientBehavior>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DpSection {
    pub gamma: Option<f64>,
    pub sensitivity: Option<f64>,
    pub release_fraction: Option<f64>,
    pub epsilon1: Option<Epsilon>,
    pub epsilon2: Option<Epsilon>,
    pub epsilon3: Option<Epsilon>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KanonSection {
    pub k: Option<usize>,
    pub quasi_identifiers: Option<Vec<String>>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MkrumSection {
    pub m: Option<usize>,
    pub assumed_byzantine: Option<usize>,
    pub neighbor_mode: Option<NeighborMode>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AfaSection {
    pub xi: Option<f64>,
    pub delta_xi: Option<f64>,
    pub block_threshold: Option<f64>,
    pub alpha0: Option<f64>,
    pub beta0: Option<f64>,
}

fn set<T>(target: &mut T, value: &Option<T>)
where
    T: Clone,
{
    if let Some(v) = value {
        *target = v.clone();
    }
}

/// Parses config text; errors carry the line and the offending key.
pub fn parse_config(text: &str) -> Result<ConfigFile> {
    toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

/// Reads and parses a config file; relative paths inside it resolve
/// against the file's directory.
pub fn load_config(path: &Path) -> Result<ConfigFile> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.into(),
        source,
    })?;
    let mut cfg = parse_config(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })?;
    cfg.base_dir = path.parent().map(Path::to_path_buf);
    Ok(cfg)
}

impl ConfigFile {
    pub fn preset(&self) -> ExperimentPreset {
        ExperimentPreset::new(
            self.preset.name,
            self.preset.variant.unwrap_or(Variant::Clean),
            self.preset.privacy.unwrap_or(PrivacyVariant::None),
        )
    }

    pub fn strategies(&self) -> Vec<Strategy> {
        self.run
            .strategies
            .clone()
            .unwrap_or_else(|| Strategy::ALL.to_vec())
    }

    fn resolve_path(&self, p: &Path) -> PathBuf {
        match &self.base_dir {
            Some(base) if p.is_relative() => base.join(p),
            _ => p.to_path_buf(),
        }
    }

    /// One validated configuration per requested strategy.
    /// `default_data_dir` applies when the file names no data location.
    pub fn resolve(&self, default_data_dir: &Path) -> Result<Vec<SimulationConfig>> {
        let preset = self.preset();
        let data_dir = self
            .data
            .dir
            .as_deref()
            .map_or_else(|| default_data_dir.to_path_buf(), |d| self.resolve_path(d));
        let seed = self.run.seed.unwrap_or(0);
        let strategies = self.strategies();
        if strategies.is_empty() {
            return Err(Error::Config("run.strategies must not be empty".into()));
        }
        strategies
            .into_iter()
            .map(|s| {
                let mut cfg = preset.resolve(s, seed, &data_dir);
                self.apply(&mut cfg)?;
                cfg.validate()?;
                Ok(cfg)
            })
            .collect()
    }

    fn apply(&self, cfg: &mut SimulationConfig) -> Result<()> {
        if let Some(p) = &self.data.path {
            cfg.data_path = self.resolve_path(p);
        }
        set(&mut cfg.train_count, &self.data.train_count);
        if self.data.test_count.is_some() {
            cfg.test_count = self.data.test_count;
        }
        set(&mut cfg.normalize, &self.data.normalize);
        set(&mut cfg.parallel_clients, &self.run.parallel_clients);

        let t = &self.training;
        set(&mut cfg.rounds, &t.rounds);
        set(&mut cfg.local_epochs, &t.local_epochs);
        set(&mut cfg.batch_size, &t.batch_size);
        set(&mut cfg.learning_rate, &t.learning_rate);
        set(&mut cfg.model_widths, &t.model_widths);
        set(&mut cfg.client_sizes, &t.client_sizes);

        if let Some(adv) = &self.adversary {
            cfg.behaviors = adv
                .behaviors
                .iter()
                .map(|(k, b)| {
                    k.parse::<usize>()
                        .map(|id| (id, *b))
                        .map_err(|_| Error::Config(format!("adversary.behaviors key {k:?} is not a client id")))
                })
                .collect::<Result<_>>()?;
        }

        match (&mut cfg.privacy, &self.dp, &self.kanon) {
            (_, Some(_), Some(_)) => {
                return Err(Error::Config("only one of [dp] and [kanon] may be given".into()));
            }
            (PrivacyMode::Dp(dp), Some(o), None) => {
                set(&mut dp.gamma, &o.gamma);
                if o.sensitivity.is_some() {
                    dp.sensitivity = o.sensitivity;
                }
                set(&mut dp.release_fraction, &o.release_fraction);
                set(&mut dp.epsilon1, &o.epsilon1);
                set(&mut dp.epsilon2, &o.epsilon2);
                set(&mut dp.epsilon3, &o.epsilon3);
            }
            (PrivacyMode::Kanon(k), None, Some(o)) => {
                set(&mut k.k, &o.k);
                set(&mut k.quasi_identifiers, &o.quasi_identifiers);
            }
            (_, Some(_), None) => {
                return Err(Error::Config("[dp] given but preset.privacy is not \"dp\"".into()));
            }
            (_, None, Some(_)) => {
                return Err(Error::Config("[kanon] given but preset.privacy is not \"kanon\"".into()));
            }
            (_, None, None) => {}
        }

        let m = &self.mkrum;
        if m.m.is_some() {
            cfg.mkrum.m = m.m;
        }
        set(&mut cfg.mkrum.assumed_byzantine, &m.assumed_byzantine);
        set(&mut cfg.mkrum.neighbor_mode, &m.neighbor_mode);

        let a = &self.afa;
        set(&mut cfg.afa.xi, &a.xi);
        set(&mut cfg.afa.delta_xi, &a.delta_xi);
        set(&mut cfg.afa.block_threshold, &a.block_threshold);
        set(&mut cfg.afa.alpha0, &a.alpha0);
        set(&mut cfg.afa.beta0, &a.beta0);
        Ok(())
    }
}
