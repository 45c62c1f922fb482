//! CSV metrics and JSON run manifests.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BlockEvent, PrivacyMode, RoundMetrics, RunMetadata, RunOutcome, SimulationConfig, Strategy, TerminalEvent};
use crate::error::{Error, Result};
use crate::privacy::Epsilon;

pub const CSV_HEADER: [&str; 7] = [
    "round",
    "strategy",
    "test_error",
    "test_loss",
    "accepted_ids",
    "rejected_ids",
    "blocked_ids",
];

fn join_ids(ids: &[usize]) -> String {
    ids.iter().map(usize::to_string).collect::<Vec<_>>().join(";")
}

/// One row per round; id lists are `;`-separated and `blocked_ids` is
/// cumulative.
pub fn write_csv<W: Write>(writer: W, strategy: Strategy, metrics: &[RoundMetrics]) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(CSV_HEADER)?;
    for m in metrics {
        out.write_record([
            m.round.to_string(),
            strategy.to_string(),
            m.test_error.to_string(),
            m.test_loss.to_string(),
            join_ids(&m.accepted_ids()),
            join_ids(&m.rejected_ids()),
            join_ids(&m.blocked_ids()),
        ])?;
    }
    out.flush().map_err(|source| Error::Io {
        path: "<csv>".into(),
        source,
    })?;
    Ok(())
}

pub fn csv_string(strategy: Strategy, metrics: &[RoundMetrics]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(&mut buf, strategy, metrics)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

/// A choice made where the method description leaves room, recorded so
/// that readers of the outputs can see it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpenQuestion {
    pub topic: String,
    pub resolution: String,
}

fn question(topic: &str, resolution: impl Into<String>) -> OpenQuestion {
    OpenQuestion {
        topic: topic.into(),
        resolution: resolution.into(),
    }
}

/// Interpretation flags that apply to `cfg`.
pub fn open_questions(cfg: &SimulationConfig, metadata: Option<&RunMetadata>) -> Vec<OpenQuestion> {
    let mut out = vec![
        question("layer_type", "dense (fully-connected) layers with ReLU"),
        question(
            "optimizer_state",
            "each client starts every round with a fresh Adam state",
        ),
        question(
            "client_partition_order",
            "client sizes are assigned in listed order to clients 1..n",
        ),
    ];
    if let Some(meta) = metadata {
        if meta.unused_rows > 0 {
            out.push(question(
                "unused_rows",
                format!("{} rows are in neither the training nor the test split", meta.unused_rows),
            ));
        }
    }
    match cfg.strategy {
        Strategy::Mkrum => out.push(question(
            "mkrum_selection",
            format!(
                "m = {}, assumed bad clients = {}, {:?} scores",
                cfg.mkrum
                    .m
                    .map_or_else(|| "n - assumed".to_string(), |m| m.to_string()),
                cfg.mkrum.assumed_byzantine,
                cfg.mkrum.neighbor_mode
            ),
        )),
        Strategy::Afa => {
            out.push(question(
                "afa_parameters",
                format!(
                    "xi = {}, delta_xi = {}, block below {}, prior ({}, {})",
                    cfg.afa.xi, cfg.afa.delta_xi, cfg.afa.block_threshold, cfg.afa.alpha0, cfg.afa.beta0
                ),
            ));
            out.push(question(
                "afa_weights",
                "aggregate is sum(p_k d_k theta_k) / sum(p_k d_k)",
            ));
            out.push(question(
                "afa_outlier_center",
                "one-sided outlier band is centered on the median similarity",
            ));
        }
        Strategy::Fedavg | Strategy::Comed => {}
    }
    match &cfg.privacy {
        PrivacyMode::None => {}
        PrivacyMode::Dp(dp) => {
            let eps = |e: Epsilon| match e {
                Epsilon::Finite(v) => v.to_string(),
                Epsilon::Infinite => "infinite".into(),
            };
            out.push(question(
                "dp_noise_scales",
                format!(
                    "selection 2cs/eps1, threshold 2cs/eps2, output 2cs/eps3 with s = {}",
                    dp.sensitivity()
                ),
            ));
            out.push(question("dp_epsilon2", format!("epsilon2 = {}", eps(dp.epsilon2))));
            out.push(question(
                "dp_release_target",
                "deltas against the current global model are released",
            ));
        }
        PrivacyMode::Kanon(_) => out.push(question(
            "kanon_mapping_merge",
            "test set uses the union of client interval boundaries, re-merged to k on the test data",
        )),
    }
    if cfg.normalize {
        out.push(question(
            "normalization",
            "z-score features with the pooled client training statistics",
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRun {
    pub strategy: Strategy,
    /// CSV file name relative to the manifest.
    pub csv: String,
    pub config: SimulationConfig,
    pub rounds_completed: usize,
    pub final_test_error: Option<f64>,
    pub block_events: Vec<BlockEvent>,
    pub terminal: Option<TerminalEvent>,
    pub metadata: RunMetadata,
    pub open_questions: Vec<OpenQuestion>,
}

impl ManifestRun {
    pub fn new(cfg: &SimulationConfig, outcome: &RunOutcome, csv: impl Into<String>) -> Self {
        Self {
            strategy: outcome.strategy,
            csv: csv.into(),
            config: cfg.clone(),
            rounds_completed: outcome.metrics.len(),
            final_test_error: outcome.final_error(),
            block_events: outcome.block_events(),
            terminal: outcome.terminal.clone(),
            metadata: outcome.metadata.clone(),
            open_questions: open_questions(cfg, Some(&outcome.metadata)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: u32,
    /// Free-form notes, e.g. the preset that produced the runs.
    #[serde(default)]
    pub notes: Vec<String>,
    pub runs: Vec<ManifestRun>,
}

impl RunManifest {
    pub fn new(runs: Vec<ManifestRun>) -> Self {
        Self {
            format_version: 1,
            notes: Vec::new(),
            runs,
        }
    }

    pub fn configs(&self) -> impl Iterator<Item = &SimulationConfig> {
        self.runs.iter().map(|r| &r.config)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.into(),
            source,
        })?;
        Self::from_json(&text)
    }
}
