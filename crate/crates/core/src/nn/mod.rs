//! Dense ReLU classifier, backpropagation and Adam.

mod adam;
mod mlp;
mod train;

pub use adam::{AdamConfig, AdamState};
pub use mlp::{softmax, LayerSpec, MlpModel};
pub use train::{train_local, TrainSchedule};
