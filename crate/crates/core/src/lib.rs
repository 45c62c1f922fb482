//! Deterministic federated-learning simulator for small tabular classifiers.
//!
//! The crate covers the whole pipeline: a dense network with Adam, CSV
//! ingestion and client partitioning, four server-side aggregation rules,
//! poisoning adversaries, client-side privacy mechanisms, and the round
//! loop that ties them together.

pub mod adversary;
pub mod aggregation;
pub mod data;
pub mod error;
pub mod experiment;
pub mod nn;
pub mod params;
pub mod privacy;
pub mod sim;

pub use adversary::ClientBehavior;
pub use aggregation::{AfaConfig, ClientProfile, MkrumConfig, ModelUpdate, NeighborMode};
pub use data::{PartitionPlan, TabularDataset};
pub use error::{Error, Result};
pub use experiment::{ExperimentPreset, PresetName, PrivacyVariant, Variant};
pub use nn::{AdamConfig, MlpModel};
pub use params::ParameterVector;
pub use privacy::{DpConfig, Epsilon, GeneralizationMapping, KAnonConfig, SparseUpdate};
pub use sim::{
    derive_seed, evaluate, run, ClientStatus, DatasetKind, PrivacyMode, RoundMetrics, RunOutcome,
    SimulationConfig, Strategy,
};
