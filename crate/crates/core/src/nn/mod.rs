//! Minimal dense-network kernel: hashed features, rectifier MLPs, softmax
//! cross-entropy, first-order optimizers, gradient checking and checkpoints.

mod checkpoint;
mod features;
mod gradcheck;
mod loss;
mod mlp;
mod optim;

pub use checkpoint::{reals17, Checkpoint, CHECKPOINT_FORMAT_VERSION};
pub use features::{featurize, fnv1a64, FeatureVector, FNV_OFFSET_BASIS, FNV_PRIME};
pub use gradcheck::{finite_diff_check, GradCheck};
pub use loss::{log_softmax, softmax, softmax_ce, softmax_ce_label};
pub use mlp::{Input, Layout, Mlp, Trace};
pub use optim::{Optimizer, OptimizerKind, TrainConfig, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("non-finite {0} encountered during training")]
    NonFinite(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
}
