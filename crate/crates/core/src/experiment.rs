//! Cross-validated comparison of augmentation configurations.
//!
//! Each clip is expanded once with every augmentation switched on and its
//! samples are featurized straight away; a configuration then just selects a
//! subset of that bank. Rotation angles depend only on the seed, clip and
//! phase, so the subset is exactly what a dedicated expansion would produce.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::augment::{expand_sequence, AugmentConfig, AugmentError, SkippedPhase, SplitRole, Transform};
use crate::evalkit::{
    aggregate, confusion_matrix, kfold_split, write_atomic, EvalError, EvalReport, FoldResult, FoldSpec, MeanStd,
    SplitStrategy,
};
use crate::frameseq::{DatasetManifest, FrameSequence};
use crate::rankpool::Phase;
use crate::refclf::{featurize, predict_features, train, ClassifierModel, ClfError, TrainConfig, TrainSample};
use crate::seed::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AugMode {
    None,
    FlipRotate,
    Dual,
    DualFlipRotate,
}

impl AugMode {
    pub const ALL: [AugMode; 4] = [AugMode::None, AugMode::FlipRotate, AugMode::Dual, AugMode::DualFlipRotate];

    pub fn as_str(self) -> &'static str {
        match self {
            AugMode::None => "none",
            AugMode::FlipRotate => "flip_rotate",
            AugMode::Dual => "dual",
            AugMode::DualFlipRotate => "dual_flip_rotate",
        }
    }

    pub fn uses_dual(self) -> bool {
        matches!(self, AugMode::Dual | AugMode::DualFlipRotate)
    }

    pub fn uses_spatial(self) -> bool {
        matches!(self, AugMode::FlipRotate | AugMode::DualFlipRotate)
    }

    /// Whether a training sample with this transform belongs to the mode.
    pub fn admits(self, t: &Transform) -> bool {
        (t.phase == Phase::Full || self.uses_dual()) && (!t.is_spatial() || self.uses_spatial())
    }
}

impl std::fmt::Display for AugMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AugMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AugMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown augmentation `{s}` (expected none, flip_rotate, dual or dual_flip_rotate)"))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] AugmentError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("fold {fold}: training failed: {source}")]
    Train { fold: usize, source: ClfError },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub aug: AugMode,
    pub k: usize,
    pub strategy: SplitStrategy,
    pub seed: u64,
    /// Training hyperparameters; the seed is replaced per fold.
    pub train: TrainConfig,
    pub input_side: usize,
    pub output_size: usize,
    pub rotation_limit: f64,
    /// Train folds concurrently. Results are identical either way.
    pub parallel_folds: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            aug: AugMode::None,
            k: 5,
            strategy: SplitStrategy::StratifiedByLabel,
            seed: 42,
            train: TrainConfig::default(),
            input_side: crate::refclf::DEFAULT_INPUT_SIDE,
            output_size: 224,
            rotation_limit: 10.0,
            parallel_folds: false,
        }
    }
}

impl ExperimentConfig {
    pub fn augment_config(&self) -> AugmentConfig {
        AugmentConfig {
            enable_dual_di: true,
            enable_flip: true,
            enable_rotation: true,
            rotation_limit: self.rotation_limit,
            seed: self.seed,
            output_size: self.output_size,
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        self.augment_config().validate().map_err(|e| ExperimentError::Config(e.to_string()))?;
        self.train.validate().map_err(|e| ExperimentError::Config(e.to_string()))?;
        if self.input_side == 0 {
            return Err(ExperimentError::Config("input_side must be positive".into()));
        }
        Ok(())
    }
}

/// A featurized sample.
#[derive(Debug, Clone, PartialEq)]
pub struct BankSample {
    /// Manifest entry the sample came from.
    pub entry: usize,
    pub label: usize,
    pub transform: Transform,
    pub role: SplitRole,
    pub features: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct FeatureBank {
    pub samples: Vec<BankSample>,
    pub skipped: Vec<SkippedPhase>,
    pub labels: Vec<String>,
    pub input_side: usize,
    pub channels: usize,
    pub seed: u64,
}

impl FeatureBank {
    /// Samples of `entries` admitted by `mode`.
    pub fn training_view(&self, mode: AugMode, entries: &[bool]) -> Vec<&BankSample> {
        self.samples.iter().filter(|s| entries[s.entry] && mode.admits(&s.transform)).collect()
    }

    /// Untransformed full-clip samples of `entries`.
    pub fn eval_view(&self, entries: &[bool]) -> Vec<&BankSample> {
        self.samples.iter().filter(|s| entries[s.entry] && s.role == SplitRole::Eval).collect()
    }
}

/// Expands and featurizes every clip on the current rayon pool.
pub fn build_feature_bank(
    manifest: &DatasetManifest,
    sequences: &[FrameSequence],
    cfg: &ExperimentConfig,
) -> Result<FeatureBank, ExperimentError> {
    cfg.validate()?;
    let aug = cfg.augment_config();
    if sequences.len() != manifest.len() {
        return Err(AugmentError::SequenceCount(sequences.len(), manifest.len()).into());
    }
    let parts: Vec<_> = manifest
        .entries
        .par_iter()
        .zip(sequences.par_iter())
        .enumerate()
        .map(|(i, (entry, seq))| {
            let (samples, skipped) = expand_sequence(seq, &entry.annotation, &aug)?;
            let label = manifest.label_index(&entry.annotation.label).expect("label is in the vocabulary");
            let featurized = samples
                .into_iter()
                .map(|s| {
                    let features = featurize(&s.image, cfg.input_side).map_err(|e| match e {
                        ClfError::Frame(f) => AugmentError::Frame(f),
                        other => unreachable!("featurize only fails on frame errors: {other}"),
                    })?;
                    Ok(BankSample { entry: i, label, transform: s.transform, role: s.split_role, features })
                })
                .collect::<Result<Vec<_>, AugmentError>>()?;
            Ok((featurized, skipped))
        })
        .collect::<Result<_, AugmentError>>()?;
    let channels = sequences.first().map_or(1, |s| s.dims().2);
    let mut bank = FeatureBank {
        samples: Vec::new(),
        skipped: Vec::new(),
        labels: manifest.label_vocabulary.clone(),
        input_side: cfg.input_side,
        channels,
        seed: cfg.seed,
    };
    for (samples, skipped) in parts {
        bank.samples.extend(samples);
        bank.skipped.extend(skipped);
    }
    Ok(bank)
}

/// Report and per-fold models of one cross-validated run.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub report: EvalReport,
    pub models: Vec<ClassifierModel>,
}

fn run_fold(
    manifest: &DatasetManifest,
    bank: &FeatureBank,
    folds: &FoldSpec,
    fold: usize,
    cfg: &ExperimentConfig,
) -> Result<(FoldResult, ClassifierModel), ExperimentError> {
    let held_out: Vec<bool> = folds.entry_folds.iter().map(|&f| f == fold).collect();
    let in_train: Vec<bool> = held_out.iter().map(|h| !h).collect();
    let samples: Vec<TrainSample> = bank
        .training_view(cfg.aug, &in_train)
        .into_iter()
        .map(|s| TrainSample {
            features: s.features.clone(),
            label: s.label,
            group: manifest.entries[s.entry].annotation.sequence_id.clone(),
            is_eval_view: s.role == SplitRole::Eval,
        })
        .collect();
    let train_cfg = TrainConfig { seed: derive_seed(cfg.seed, &["train", &fold.to_string()]), ..cfg.train.clone() };
    let (model, _) = train(&samples, &bank.labels, bank.input_side, bank.channels, &train_cfg)
        .map_err(|source| ExperimentError::Train { fold, source })?;

    let eval = bank.eval_view(&held_out);
    let truths: Vec<usize> = eval.iter().map(|s| s.label).collect();
    let preds = eval
        .iter()
        .map(|s| predict_features(&model, &s.features))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|source| ExperimentError::Train { fold, source })?;
    let cm = confusion_matrix(&truths, &preds, bank.labels.len())?;
    Ok((FoldResult::new(fold, cm, samples.len())?, model))
}

/// k-fold cross-validation of one augmentation mode over a prepared bank.
/// Training uses the mode's samples from the other folds; evaluation uses
/// only the held-out clips' untransformed full images.
pub fn run_experiment(
    manifest: &DatasetManifest,
    bank: &FeatureBank,
    cfg: &ExperimentConfig,
) -> Result<ExperimentOutcome, ExperimentError> {
    cfg.validate()?;
    if bank.seed != cfg.seed || bank.input_side != cfg.input_side {
        return Err(ExperimentError::Config("feature bank was built with a different seed or input side".into()));
    }
    let folds = kfold_split(manifest, cfg.k, cfg.seed, cfg.strategy)?;
    let results: Vec<_> = if cfg.parallel_folds {
        (0..cfg.k).into_par_iter().map(|f| run_fold(manifest, bank, &folds, f, cfg)).collect()
    } else {
        (0..cfg.k).map(|f| run_fold(manifest, bank, &folds, f, cfg)).collect()
    };
    let mut fold_results = Vec::with_capacity(cfg.k);
    let mut models = Vec::with_capacity(cfg.k);
    for r in results {
        let (fr, m) = r?;
        fold_results.push(fr);
        models.push(m);
    }
    let report = EvalReport::new(cfg.aug.as_str(), cfg.strategy, cfg.seed, bank.labels.clone(), fold_results)?;
    Ok(ExperimentOutcome { report, models })
}

/// Builds the bank and runs a single configuration.
pub fn experiment(
    manifest: &DatasetManifest,
    sequences: &[FrameSequence],
    cfg: &ExperimentConfig,
) -> Result<ExperimentOutcome, ExperimentError> {
    let bank = build_feature_bank(manifest, sequences, cfg)?;
    run_experiment(manifest, &bank, cfg)
}

/// One configuration's results across seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub config: AugMode,
    pub n_seeds: usize,
    /// Statistics over the per-seed fold means.
    pub acc: MeanStd,
    pub uf1: MeanStd,
    pub uar: MeanStd,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    /// Ordered by seed, then configuration.
    pub reports: Vec<EvalReport>,
    /// Sorted by mean UF1, highest first.
    pub summary: Vec<SummaryRow>,
}

impl Comparison {
    pub fn report(&self, mode: AugMode, seed: u64) -> Option<&EvalReport> {
        self.reports.iter().find(|r| r.seed == seed && r.config == mode.as_str())
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from("config,n_seeds,acc_mean,acc_std,uf1_mean,uf1_std,uar_mean,uar_std\n");
        for r in &self.summary {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.config, r.n_seeds, r.acc.mean, r.acc.std, r.uf1.mean, r.uf1.std, r.uar.mean, r.uar.std
            );
        }
        out
    }

    /// Writes `<config>_seed<seed>.json` per report and `summary.csv`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, ExperimentError> {
        let mut written = Vec::new();
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| ExperimentError::Io { path, source }
        };
        for r in &self.reports {
            let path = dir.join(format!("{}_seed{}.json", r.config, r.seed));
            write_atomic(&path, r.to_json().as_bytes()).map_err(io(&path))?;
            written.push(path);
        }
        let path = dir.join("summary.csv");
        write_atomic(&path, self.summary_csv().as_bytes()).map_err(io(&path))?;
        written.push(path);
        Ok(written)
    }
}

/// Runs every configuration for every seed. The bank is built once per seed
/// and shared by the four configurations.
pub fn compare(
    manifest: &DatasetManifest,
    sequences: &[FrameSequence],
    base: &ExperimentConfig,
    seeds: &[u64],
) -> Result<Comparison, ExperimentError> {
    if seeds.is_empty() {
        return Err(ExperimentError::Config("at least one seed is required".into()));
    }
    let mut reports = Vec::with_capacity(seeds.len() * AugMode::ALL.len());
    for &seed in seeds {
        let cfg = ExperimentConfig { seed, ..base.clone() };
        let bank = build_feature_bank(manifest, sequences, &cfg)?;
        for aug in AugMode::ALL {
            let run = ExperimentConfig { aug, ..cfg.clone() };
            reports.push(run_experiment(manifest, &bank, &run)?.report);
        }
    }
    let mut summary = AugMode::ALL
        .into_iter()
        .map(|mode| {
            let mine: Vec<_> = reports.iter().filter(|r| r.config == mode.as_str()).collect();
            let col = |f: fn(&EvalReport) -> f64| aggregate(&mine.iter().map(|r| f(r)).collect::<Vec<_>>());
            Ok(SummaryRow {
                config: mode,
                n_seeds: mine.len(),
                acc: col(|r| r.aggregate.acc.mean)?,
                uf1: col(|r| r.aggregate.uf1.mean)?,
                uar: col(|r| r.aggregate.uar.mean)?,
            })
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    summary.sort_by(|a, b| b.uf1.mean.total_cmp(&a.uf1.mean).then(a.config.cmp(&b.config)));
    Ok(Comparison { reports, summary })
}
