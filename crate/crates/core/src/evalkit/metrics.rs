use serde::{Deserialize, Serialize};

use super::EvalError;

/// `counts[i][j]` is the number of samples of true class `i` predicted as `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn zeros(k: usize) -> Self {
        Self { counts: vec![vec![0; k]; k] }
    }

    /// Wraps a square matrix of counts.
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self, EvalError> {
        let k = counts.len();
        if counts.iter().any(|row| row.len() != k) {
            return Err(EvalError::NotSquare);
        }
        Ok(Self { counts })
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn get(&self, truth: usize, pred: usize) -> u64 {
        self.counts[truth][pred]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.k()).map(|i| self.counts[i][i]).sum()
    }

    /// Row sum: samples whose true class is `c`.
    pub fn support(&self, c: usize) -> u64 {
        self.counts[c].iter().sum()
    }

    /// Column sum: samples predicted as `c`.
    pub fn predicted(&self, c: usize) -> u64 {
        self.counts.iter().map(|row| row[c]).sum()
    }

    fn non_empty(&self) -> Result<(), EvalError> {
        if self.total() == 0 {
            Err(EvalError::EmptyMatrix)
        } else {
            Ok(())
        }
    }
}

pub fn confusion_matrix(truths: &[usize], preds: &[usize], k: usize) -> Result<ConfusionMatrix, EvalError> {
    if truths.len() != preds.len() {
        return Err(EvalError::LengthMismatch { truths: truths.len(), preds: preds.len() });
    }
    let mut cm = ConfusionMatrix::zeros(k);
    for (&t, &p) in truths.iter().zip(preds) {
        if t >= k || p >= k {
            return Err(EvalError::IndexOutOfRange { index: t.max(p), k });
        }
        cm.counts[t][p] += 1;
    }
    Ok(cm)
}

pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64, EvalError> {
    cm.non_empty()?;
    Ok(cm.trace() as f64 / cm.total() as f64)
}

/// Unweighted (macro) F1. Classes that never occur and are never predicted
/// are left out of the mean.
pub fn uf1(cm: &ConfusionMatrix) -> Result<f64, EvalError> {
    cm.non_empty()?;
    let scores: Vec<f64> = (0..cm.k())
        .filter_map(|c| {
            let tp = cm.get(c, c);
            let fp = cm.predicted(c) - tp;
            let fn_ = cm.support(c) - tp;
            let denom = 2 * tp + fp + fn_;
            (denom > 0).then(|| 2.0 * tp as f64 / denom as f64)
        })
        .collect();
    if scores.is_empty() {
        return Err(EvalError::NoIncludedClasses);
    }
    Ok(order_free_mean(scores))
}

/// Mean summed in ascending order, so relabeling classes cannot change the
/// rounding.
fn order_free_mean(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum::<f64>() / values.len() as f64
}

/// Unweighted average recall over classes with nonzero support.
pub fn uar(cm: &ConfusionMatrix) -> Result<f64, EvalError> {
    cm.non_empty()?;
    let recalls: Vec<f64> = (0..cm.k())
        .filter(|&c| cm.support(c) > 0)
        .map(|c| cm.get(c, c) as f64 / cm.support(c) as f64)
        .collect();
    Ok(order_free_mean(recalls))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

/// Arithmetic mean and population standard deviation.
pub fn aggregate(values: &[f64]) -> Result<MeanStd, EvalError> {
    if values.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Ok(MeanStd { mean, std: var.sqrt() })
}
