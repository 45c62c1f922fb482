#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use medfed_core::sim::{DatasetKind, PrivacyMode, SimulationConfig, Strategy};
use medfed_core::{AfaConfig, MkrumConfig};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

/// The full datasets shipped at the workspace root.
pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

/// Small, fast configuration over the synthetic Pima fixture (60 rows).
pub fn tiny_config(strategy: Strategy) -> SimulationConfig {
    SimulationConfig {
        dataset: DatasetKind::Pima,
        data_path: fixture("pima_tiny.csv"),
        train_count: 45,
        test_count: Some(15),
        normalize: true,
        rounds: 4,
        local_epochs: 2,
        batch_size: 5,
        learning_rate: 1e-2,
        model_widths: vec![6, 2],
        client_sizes: vec![15, 15, 15],
        strategy,
        mkrum: MkrumConfig::default(),
        afa: AfaConfig::default(),
        behaviors: BTreeMap::new(),
        privacy: PrivacyMode::None,
        master_seed: 3,
        parallel_clients: false,
    }
}
