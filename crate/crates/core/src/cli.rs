//! Command-line front end.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 training
//! error. Each command prints one summary line on stdout; warnings go to
//! stderr.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::augment::{expand_training_set, write_samples, AugmentConfig, AugmentError};
use crate::evalkit::{write_atomic, EvalError, SplitStrategy};
use crate::experiment::{
    build_feature_bank, compare, run_experiment, AugMode, ExperimentConfig, ExperimentError,
};
use crate::frameseq::{load_sequence, parse_manifest, DatasetManifest, FrameError, FrameSequence};
use crate::refclf::{save_model, TrainConfig};
use crate::synthgen::{synth_dataset, write_dataset, JitterSpec, SynthError};

#[derive(Debug, Parser)]
#[command(name = "dualdi", version, about = "Dual-phase dynamic images: synthesis, encoding and evaluation")]
pub struct Cli {
    /// Base seed for every random stream [default: 42]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads [default: all cores]
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// File of `key = value` lines; command-line flags take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset: frame directories plus manifest.csv
    Synth(SynthArgs),
    /// Encode clips from a manifest into dynamic-image PNGs plus index.csv
    Encode(EncodeArgs),
    /// Cross-validate one augmentation configuration
    Experiment(ExperimentArgs),
    /// Cross-validate all four configurations over several seeds
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Number of sequences [default: 150]
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of classes [default: 3]
    #[arg(long)]
    pub classes: Option<usize>,
    /// Frame width and height in pixels [default: 64]
    #[arg(long)]
    pub size: Option<usize>,
    /// Gaussian pixel noise standard deviation [default: 24]
    #[arg(long)]
    pub noise: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EncodeMode {
    Full,
    Dual,
}

impl FromStr for EncodeMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        <Self as ValueEnum>::from_str(s, false)
    }
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    /// Manifest CSV
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// `full`: one image per clip; `dual`: full, onset and offset images [default: dual]
    #[arg(long, value_enum)]
    pub mode: Option<EncodeMode>,
    /// Output side length [default: 224]
    #[arg(long)]
    pub resize: Option<usize>,
    /// Convert frames to luma before pooling
    #[arg(long)]
    pub grayscale: bool,
}

#[derive(Debug, Args, Default)]
pub struct TrainArgs {
    /// Initial learning rate [default: 1e-4]
    #[arg(long)]
    pub lr0: Option<f64>,
    /// [default: 25]
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// [default: 50]
    #[arg(long)]
    pub max_epochs: Option<usize>,
    /// [default: 5]
    #[arg(long)]
    pub patience: Option<usize>,
    /// Share of training clips held out for early stopping [default: 0.2]
    #[arg(long)]
    pub val_fraction: Option<f64>,
    /// Feature downsample side [default: 32]
    #[arg(long)]
    pub input_side: Option<usize>,
    /// Rotation limit in degrees for spatial augmentation [default: 10]
    #[arg(long)]
    pub rotation_limit: Option<f64>,
    /// Train folds concurrently
    #[arg(long)]
    pub parallel_folds: bool,
    /// Convert frames to luma before pooling
    #[arg(long)]
    pub grayscale: bool,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Manifest CSV
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// none, flip_rotate, dual or dual_flip_rotate [default: none]
    #[arg(long)]
    pub aug: Option<AugMode>,
    /// Number of folds [default: 5]
    #[arg(long)]
    pub k: Option<usize>,
    /// stratified or grouped [default: stratified]
    #[arg(long)]
    pub strategy: Option<SplitStrategy>,
    /// JSON report path; a CSV is written next to it [default: <out>/report.json]
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Directory for per-fold model checkpoints
    #[arg(long)]
    pub models: Option<PathBuf>,
    #[command(flatten)]
    pub train: TrainArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Manifest CSV
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub strategy: Option<SplitStrategy>,
    /// Comma-separated seeds [default: the --seed value]
    #[arg(long)]
    pub seeds: Option<String>,
    /// Directory receiving one JSON report per run and summary.csv [default: <out>]
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub train: TrainArgs,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Train(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Train(_) => 4,
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Config(_) | ExperimentError::Eval(EvalError::TooFewSamples { .. })
            | ExperimentError::Eval(EvalError::TooFewSubjects { .. }) => CliError::Config(e.to_string()),
            ExperimentError::Train { .. } => CliError::Train(e.to_string()),
            ExperimentError::Data(_) | ExperimentError::Eval(_) | ExperimentError::Io { .. } => {
                CliError::Data(e.to_string())
            }
        }
    }
}

const CONFIG_KEYS: &[&str] = &[
    "seed", "jobs", "out", "n", "classes", "size", "noise", "manifest", "mode", "resize", "grayscale", "aug", "k",
    "strategy", "seeds", "report", "models", "lr0", "batch_size", "max_epochs", "patience", "val_fraction",
    "input_side", "rotation_limit", "parallel_folds",
];

/// Parses `key = value` lines. Blank lines and `#` comments are ignored;
/// dashes in keys are read as underscores.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("config line {}: expected `key = value`", i + 1)))?;
        let key = key.trim().replace('-', "_");
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err(CliError::Config(format!("config line {}: unknown key `{key}`", i + 1)));
        }
        map.insert(key, value.trim().to_string());
    }
    Ok(map)
}

/// Merges flag values over config-file values over defaults.
struct Settings {
    file: BTreeMap<String, String>,
}

impl Settings {
    fn get<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.file
            .get(key)
            .map(|v| v.parse::<T>().map_err(|e| CliError::Config(format!("config key `{key}`: {e}"))))
            .transpose()
    }

    fn or<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(flag, key)?.unwrap_or(default))
    }

    fn switch(&self, flag: bool, key: &str) -> Result<bool, CliError> {
        Ok(flag || self.get::<bool>(None, key)?.unwrap_or(false))
    }

    fn required(&self, flag: Option<PathBuf>, key: &str) -> Result<PathBuf, CliError> {
        self.get(flag, key)?.ok_or_else(|| CliError::Config(format!("--{key} is required")))
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command and returns its summary line.
pub fn execute(cli: Cli) -> Result<String, CliError> {
    let file = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            parse_config(&text)?
        }
        None => BTreeMap::new(),
    };
    let settings = Settings { file };
    let seed = settings.or(cli.seed, "seed", 42u64)?;
    let jobs = match settings.get(cli.jobs, "jobs")? {
        Some(0) => return Err(CliError::Config("--jobs must be at least 1".into())),
        Some(j) => j,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let out = settings.get(cli.out, "out")?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::Synth(a) => cmd_synth(&settings, a, seed, out),
        Command::Encode(a) => cmd_encode(&settings, a, out),
        Command::Experiment(a) => cmd_experiment(&settings, a, seed, out),
        Command::Compare(a) => cmd_compare(&settings, a, seed, out),
    })
}

fn cmd_synth(s: &Settings, a: SynthArgs, seed: u64, out: Option<PathBuf>) -> Result<String, CliError> {
    let n = s.or(a.n, "n", 150usize)?;
    let classes = s.or(a.classes, "classes", 3usize)?;
    let size = s.or(a.size, "size", 64usize)?;
    let defaults = JitterSpec::default();
    let jitter = JitterSpec {
        width: size,
        height: size,
        noise_sigma: s.or(a.noise, "noise", defaults.noise_sigma)?,
        ..defaults
    };
    let out = out.unwrap_or_else(|| PathBuf::from("synth"));
    let synth_err = |e: SynthError| match e {
        SynthError::Frame(f) => CliError::Data(f.to_string()),
        other => CliError::Config(other.to_string()),
    };
    let dataset = synth_dataset(n, classes, seed, &jitter).map_err(synth_err)?;
    let manifest = write_dataset(&dataset, &out).map_err(synth_err)?;
    Ok(format!(
        "synth: {n} sequences, {} classes -> {}",
        dataset.manifest.label_vocabulary.len(),
        manifest.display()
    ))
}

fn load_manifest(path: &Path) -> Result<DatasetManifest, CliError> {
    parse_manifest(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Loads every clip on the current pool. Errors name the failing sequence.
fn load_all(manifest: &DatasetManifest, grayscale: bool) -> Result<Vec<FrameSequence>, CliError> {
    manifest
        .entries
        .par_iter()
        .map(|e| {
            load_sequence(manifest, e, grayscale)
                .map_err(|err| CliError::Data(format!("sequence {}: {err}", e.annotation.sequence_id)))
        })
        .collect()
}

fn cmd_encode(s: &Settings, a: EncodeArgs, out: Option<PathBuf>) -> Result<String, CliError> {
    let manifest = load_manifest(&s.required(a.manifest, "manifest")?)?;
    let mode = s.or(a.mode, "mode", EncodeMode::Dual)?;
    let resize = s.or(a.resize, "resize", 224usize)?;
    let grayscale = s.switch(a.grayscale, "grayscale")?;
    let out = out.unwrap_or_else(|| PathBuf::from("encoded"));
    let cfg = AugmentConfig { enable_dual_di: mode == EncodeMode::Dual, output_size: resize, ..AugmentConfig::default() };
    cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let sequences = load_all(&manifest, grayscale)?;
    let expansion = expand_training_set(&manifest, &sequences, &cfg).map_err(|e| match e {
        AugmentError::AngleOutOfRange(_) | AugmentError::BadRotationLimit(_) => CliError::Config(e.to_string()),
        other => CliError::Data(other.to_string()),
    })?;
    let index = write_samples(&expansion.samples, &out).map_err(|e: FrameError| CliError::Data(e.to_string()))?;
    Ok(format!(
        "encode: {} images from {} sequences ({} phases skipped) -> {}",
        expansion.samples.len(),
        manifest.len(),
        expansion.skipped.len(),
        index.display()
    ))
}

fn experiment_config(s: &Settings, t: &TrainArgs, seed: u64, k: Option<usize>, strategy: Option<SplitStrategy>) -> Result<ExperimentConfig, CliError> {
    let d = ExperimentConfig::default();
    let td = TrainConfig::default();
    Ok(ExperimentConfig {
        aug: AugMode::None,
        k: s.or(k, "k", d.k)?,
        strategy: s.or(strategy, "strategy", d.strategy)?,
        seed,
        train: TrainConfig {
            lr0: s.or(t.lr0, "lr0", td.lr0)?,
            batch_size: s.or(t.batch_size, "batch_size", td.batch_size)?,
            max_epochs: s.or(t.max_epochs, "max_epochs", td.max_epochs)?,
            patience: s.or(t.patience, "patience", td.patience)?,
            val_fraction: s.or(t.val_fraction, "val_fraction", td.val_fraction)?,
            ..td
        },
        input_side: s.or(t.input_side, "input_side", d.input_side)?,
        rotation_limit: s.or(t.rotation_limit, "rotation_limit", d.rotation_limit)?,
        parallel_folds: s.switch(t.parallel_folds, "parallel_folds")?,
        ..d
    })
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Data(format!("{}: {e}", path.display()))
}

fn cmd_experiment(s: &Settings, a: ExperimentArgs, seed: u64, out: Option<PathBuf>) -> Result<String, CliError> {
    let manifest_path = s.required(a.manifest, "manifest")?;
    let mut cfg = experiment_config(s, &a.train, seed, a.k, a.strategy)?;
    cfg.aug = s.or(a.aug, "aug", AugMode::None)?;
    cfg.validate()?;
    let report_path = match s.get(a.report, "report")? {
        Some(p) => p,
        None => out.unwrap_or_else(|| PathBuf::from("results")).join("report.json"),
    };
    let models_dir = s.get(a.models, "models")?;
    let grayscale = s.switch(a.train.grayscale, "grayscale")?;

    let manifest = load_manifest(&manifest_path)?;
    let sequences = load_all(&manifest, grayscale)?;
    let bank = build_feature_bank(&manifest, &sequences, &cfg)?;
    drop(sequences);
    let outcome = run_experiment(&manifest, &bank, &cfg)?;

    let report = &outcome.report;
    write_atomic(&report_path, report.to_json().as_bytes()).map_err(io_err(&report_path))?;
    let csv_path = report_path.with_extension("csv");
    write_atomic(&csv_path, report.to_csv().as_bytes()).map_err(io_err(&csv_path))?;
    if let Some(dir) = models_dir {
        for (fold, model) in outcome.models.iter().enumerate() {
            let path = dir.join(format!("fold{fold}.model"));
            save_model(model, &path).map_err(|e| CliError::Data(e.to_string()))?;
        }
    }
    let agg = &report.aggregate;
    Ok(format!(
        "experiment {}: acc {:.4}±{:.4} uf1 {:.4}±{:.4} uar {:.4}±{:.4} over {} folds -> {}",
        cfg.aug,
        agg.acc.mean,
        agg.acc.std,
        agg.uf1.mean,
        agg.uf1.std,
        agg.uar.mean,
        agg.uar.std,
        report.k,
        report_path.display()
    ))
}

fn parse_seeds(text: &str) -> Result<Vec<u64>, CliError> {
    text.split(',')
        .map(|p| p.trim().parse::<u64>().map_err(|e| CliError::Config(format!("--seeds `{p}`: {e}"))))
        .collect()
}

fn cmd_compare(s: &Settings, a: CompareArgs, seed: u64, out: Option<PathBuf>) -> Result<String, CliError> {
    let manifest_path = s.required(a.manifest, "manifest")?;
    let cfg = experiment_config(s, &a.train, seed, a.k, a.strategy)?;
    cfg.validate()?;
    let seeds = match s.get(a.seeds, "seeds")? {
        Some(text) => parse_seeds(&text)?,
        None => vec![seed],
    };
    let dir = match s.get(a.report, "report")? {
        Some(p) => p,
        None => out.unwrap_or_else(|| PathBuf::from("compare")),
    };
    let grayscale = s.switch(a.train.grayscale, "grayscale")?;

    let manifest = load_manifest(&manifest_path)?;
    let sequences = load_all(&manifest, grayscale)?;
    let comparison = compare(&manifest, &sequences, &cfg, &seeds)?;
    let files = comparison.write(&dir)?;
    let best = &comparison.summary[0];
    Ok(format!(
        "compare: {} runs over {} seeds, best {} (uf1 {:.4}) -> {} files in {}",
        comparison.reports.len(),
        seeds.len(),
        best.config,
        best.uf1.mean,
        files.len(),
        dir.display()
    ))
}

/// Initializes stderr logging as `warning: <message>`. Honors `RUST_LOG`;
/// the default level is warn.
pub fn init_logging() {
    use std::io::Write;
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format(|buf, record| {
            let level = match record.level() {
                log::Level::Error => "error",
                log::Level::Warn => "warning",
                log::Level::Info => "info",
                log::Level::Debug => "debug",
                log::Level::Trace => "trace",
            };
            writeln!(buf, "{level}: {}", record.args())
        })
        .try_init();
}
