//! Equivariant networks and the baseline CNN, with their training loop.

mod baseline;
mod check;
mod ginet;
mod model;
pub mod presets;
mod spec;
mod tape;
pub mod train;

pub use baseline::Baseline;
pub use check::{check_equivariance, random_image, EquivarianceReport};
pub use ginet::GiNet;
pub use model::{Evaluator, Model};
pub use spec::{BaselineLayer, BaselineSpec, LayerSpec, ModelSpec, NetSpec, OutputPlan, Signature};
pub use tape::Activation;
pub use train::{train, train_from, EpochRecord, TrainConfig, TrainResult, TrainStatus};
