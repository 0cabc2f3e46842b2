//! Softmax-regression classifier trained on downsampled dynamic images.

mod adam;
mod checkpoint;
mod model;
mod train;

use crate::frameseq::FrameError;

pub use adam::{cosine_lr, Adam};
pub use checkpoint::{load_model, parse_model, save_model, CHECKPOINT_MAGIC};
pub use model::{
    argmax, featurize, forward, loss_and_grad, mean_loss, predict, predict_features, softmax, ClassifierModel, Gradients,
};
pub use train::{train, EarlyStopping, EpochRecord, TrainConfig, TrainHistory, TrainSample};

/// Default downsample side for features.
pub const DEFAULT_INPUT_SIDE: usize = 32;

#[derive(Debug, thiserror::Error)]
pub enum ClfError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("non-finite parameter or value")]
    NonFinite,
    #[error("empty batch")]
    EmptyBatch,
    #[error("label {label} out of range for {k} classes")]
    LabelOutOfRange { label: usize, k: usize },
    #[error("insufficient training data ({0} samples)")]
    InsufficientData(usize),
    #[error("training data spans a single class")]
    SingleClass,
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("checkpoint line {line}: {reason}")]
    Checkpoint { line: usize, reason: String },
    #[error("{path}: {source}")]
    Io { path: std::path::PathBuf, source: std::io::Error },
    #[error(transparent)]
    Frame(#[from] FrameError),
}
