use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::frameseq::DatasetManifest;
use crate::seed::derive_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitStrategy {
    #[default]
    StratifiedByLabel,
    GroupedBySubject,
}

impl SplitStrategy {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitStrategy::StratifiedByLabel => "stratified",
            SplitStrategy::GroupedBySubject => "grouped",
        }
    }
}

impl fmt::Display for SplitStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SplitStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "stratified" | "stratified_by_label" => Ok(SplitStrategy::StratifiedByLabel),
            "grouped" | "grouped_by_subject" | "subject" => Ok(SplitStrategy::GroupedBySubject),
            other => Err(format!("unknown split strategy `{other}` (expected stratified or grouped)")),
        }
    }
}

/// Fold assignment for every manifest entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldSpec {
    pub k: usize,
    pub strategy: SplitStrategy,
    pub seed: u64,
    /// Fold of each manifest entry, in manifest order.
    pub entry_folds: Vec<usize>,
    pub assignments: BTreeMap<String, usize>,
}

impl FoldSpec {
    pub fn fold_of(&self, sequence_id: &str) -> Option<usize> {
        self.assignments.get(sequence_id).copied()
    }

    /// Manifest entry indices held out in `fold`.
    pub fn members(&self, fold: usize) -> Vec<usize> {
        (0..self.entry_folds.len()).filter(|&i| self.entry_folds[i] == fold).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.entry_folds {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Splits the manifest into `k` folds.
///
/// Stratified: within each label (vocabulary order) entries are shuffled and
/// dealt round-robin, with the dealing position carried across labels so
/// overall fold sizes also differ by at most one.
///
/// Grouped: subjects are shuffled and each goes whole to the currently
/// smallest fold (lowest index on ties).
pub fn kfold_split(manifest: &DatasetManifest, k: usize, seed: u64, strategy: SplitStrategy) -> Result<FoldSpec, EvalError> {
    let n = manifest.len();
    if k < 2 || k > n {
        return Err(EvalError::TooFewSamples { k, n });
    }
    let mut entry_folds = vec![usize::MAX; n];
    match strategy {
        SplitStrategy::StratifiedByLabel => {
            let mut cursor = 0;
            for label in &manifest.label_vocabulary {
                let mut members: Vec<usize> =
                    (0..n).filter(|&i| &manifest.entries[i].annotation.label == label).collect();
                members.shuffle(&mut derive_rng(seed, &["kfold", label]));
                for i in members {
                    entry_folds[i] = cursor % k;
                    cursor += 1;
                }
            }
        }
        SplitStrategy::GroupedBySubject => {
            let mut by_subject: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
            for (i, e) in manifest.entries.iter().enumerate() {
                by_subject.entry(e.annotation.subject_id.as_str()).or_default().push(i);
            }
            if by_subject.len() < k {
                return Err(EvalError::TooFewSubjects { k, subjects: by_subject.len() });
            }
            let mut subjects: Vec<_> = by_subject.into_iter().collect();
            subjects.shuffle(&mut derive_rng(seed, &["kfold-subjects"]));
            let mut sizes = vec![0usize; k];
            for (_, members) in subjects {
                let fold = (0..k).min_by_key(|&f| (sizes[f], f)).unwrap_or(0);
                sizes[fold] += members.len();
                for i in members {
                    entry_folds[i] = fold;
                }
            }
        }
    }
    let assignments = manifest
        .entries
        .iter()
        .zip(&entry_folds)
        .map(|(e, &f)| (e.annotation.sequence_id.clone(), f))
        .collect();
    Ok(FoldSpec { k, strategy, seed, entry_folds, assignments })
}
