//! Soft-margin SVM trained by sequential minimal optimization, a one-vs-one
//! multi-class wrapper, grouped dataset splitting, and recall metrics.

mod kernel;
mod metrics;
mod multiclass;
mod persist;
mod smo;
mod split;

pub use kernel::{default_gamma, kernel_eval, KernelSpec};
pub use metrics::{evaluate, metrics_from_confusion, ConfusionMatrix, Metrics};
pub use multiclass::{train_multiclass, MultiClassModel, Standardizer};
pub use persist::{load_multiclass, save_multiclass};
pub use smo::{
    kkt_max_violation, train_binary, train_binary_detailed, BinaryModel, SmoResult, TrainConfig,
};
pub use split::{split_dataset, SplitResult};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SvmError {
    #[error("dimension mismatch: {a} vs {b}")]
    DimensionMismatch { a: usize, b: usize },
    #[error("training set contains a single class")]
    SingleClassInput,
    #[error("non-finite value in training input")]
    NonFiniteInput,
    #[error("class {0} has too few samples ({1}, need at least 2)")]
    ClassTooSmall(String, usize),
    #[error("fewer than two classes in training input")]
    TooFewClasses,
    #[error("test label {0} not in the model's class list")]
    UnknownLabel(String),
    #[error("empty test set")]
    EmptyTestSet,
    #[error("model parse error: {0}")]
    Parse(String),
}
