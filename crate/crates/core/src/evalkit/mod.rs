//! Confusion-matrix metrics, k-fold splitting and cross-validation reports.

mod kfold;
mod metrics;
mod report;

pub use kfold::{kfold_split, FoldSpec, SplitStrategy};
pub use metrics::{accuracy, aggregate, confusion_matrix, uar, uf1, ConfusionMatrix, MeanStd};
pub use report::{write_atomic, Aggregate, EvalReport, FoldResult};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("{truths} labels but {preds} predictions")]
    LengthMismatch { truths: usize, preds: usize },
    #[error("class index {index} out of range for {k} classes")]
    IndexOutOfRange { index: usize, k: usize },
    #[error("confusion matrix must be square")]
    NotSquare,
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("no class has support or predictions")]
    NoIncludedClasses,
    #[error("nothing to aggregate")]
    EmptyInput,
    #[error("cannot split {n} sequences into {k} folds (need 2 <= k <= n)")]
    TooFewSamples { k: usize, n: usize },
    #[error("cannot split {subjects} subjects into {k} folds")]
    TooFewSubjects { k: usize, subjects: usize },
}
