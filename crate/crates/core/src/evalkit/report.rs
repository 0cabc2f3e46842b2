use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::metrics::{accuracy, aggregate, uar, uf1, ConfusionMatrix, MeanStd};
use super::{EvalError, SplitStrategy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub confusion: ConfusionMatrix,
    pub acc: f64,
    pub uf1: f64,
    pub uar: f64,
    /// Training samples after augmentation.
    pub train_size: usize,
    pub eval_size: usize,
}

impl FoldResult {
    pub fn new(fold: usize, confusion: ConfusionMatrix, train_size: usize) -> Result<Self, EvalError> {
        Ok(Self {
            fold,
            acc: accuracy(&confusion)?,
            uf1: uf1(&confusion)?,
            uar: uar(&confusion)?,
            eval_size: confusion.total() as usize,
            train_size,
            confusion,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub acc: MeanStd,
    pub uf1: MeanStd,
    pub uar: MeanStd,
}

impl Aggregate {
    pub fn from_folds(folds: &[FoldResult]) -> Result<Self, EvalError> {
        let col = |f: fn(&FoldResult) -> f64| aggregate(&folds.iter().map(f).collect::<Vec<_>>());
        Ok(Self { acc: col(|f| f.acc)?, uf1: col(|f| f.uf1)?, uar: col(|f| f.uar)? })
    }
}

/// Per-fold and aggregate results of one cross-validated run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: String,
    pub k: usize,
    pub strategy: SplitStrategy,
    pub seed: u64,
    pub folds: Vec<FoldResult>,
    pub aggregate: Aggregate,
    pub labels: Vec<String>,
    /// Always `"population"`: fold standard deviations divide by n.
    pub std_kind: String,
}

impl EvalReport {
    pub fn new(
        config: impl Into<String>,
        strategy: SplitStrategy,
        seed: u64,
        labels: Vec<String>,
        folds: Vec<FoldResult>,
    ) -> Result<Self, EvalError> {
        let aggregate = Aggregate::from_folds(&folds)?;
        Ok(Self {
            config: config.into(),
            k: folds.len(),
            strategy,
            seed,
            folds,
            aggregate,
            labels,
            std_kind: "population".into(),
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// `config,fold,acc,uf1,uar`, one row per fold.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("config,fold,acc,uf1,uar\n");
        for f in &self.folds {
            let _ = writeln!(out, "{},{},{},{},{}", self.config, f.fold, f.acc, f.uf1, f.uar);
        }
        out
    }
}

/// Writes via a temporary file in the target directory and renames it into
/// place, so readers never observe a truncated file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
