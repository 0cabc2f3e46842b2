use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use super::adam::{cosine_lr, Adam};
use super::model::{loss_and_grad, mean_loss, ClassifierModel};
use super::ClfError;
use crate::seed::derive_rng;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr0: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
    /// Share of training groups held out for early stopping.
    pub val_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr0: 1e-4,
            batch_size: 25,
            max_epochs: 50,
            patience: 5,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            seed: 42,
            val_fraction: 0.2,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ClfError> {
        let ok = self.lr0 > 0.0
            && self.lr0.is_finite()
            && self.batch_size >= 1
            && self.patience >= 1
            && self.max_epochs >= 1
            && (0.0..1.0).contains(&self.val_fraction);
        if ok {
            Ok(())
        } else {
            Err(ClfError::InvalidConfig(format!("{self:?}")))
        }
    }

    pub fn echo(&self) -> String {
        format!(
            "lr0={} batch_size={} max_epochs={} patience={} beta1={} beta2={} eps={} seed={} val_fraction={}",
            self.lr0,
            self.batch_size,
            self.max_epochs,
            self.patience,
            self.adam_beta1,
            self.adam_beta2,
            self.adam_eps,
            self.seed,
            self.val_fraction
        )
    }
}

/// One training example.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSample {
    pub features: Vec<f64>,
    pub label: usize,
    /// Clip the sample was derived from. Validation holds out whole groups so
    /// augmented copies of a held-out clip never leak into training.
    pub group: String,
    /// Untransformed full-clip sample; only these are scored for validation
    /// when a held-out group has any.
    pub is_eval_view: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were returned.
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub stopped_early: bool,
}

/// Tracks the best validation loss and decides when to stop.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    best: f64,
    since_best: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self { patience, best: f64::INFINITY, since_best: 0 }
    }

    /// Records one epoch. Returns `(improved, should_stop)`; only a strict
    /// decrease counts as improvement.
    pub fn observe(&mut self, val_loss: f64) -> (bool, bool) {
        if val_loss < self.best {
            self.best = val_loss;
            self.since_best = 0;
            (true, false)
        } else {
            self.since_best += 1;
            (false, self.since_best >= self.patience)
        }
    }

    pub fn best(&self) -> f64 {
        self.best
    }
}

/// Splits group names into (train, validation), stratified by label.
fn split_groups(samples: &[TrainSample], cfg: &TrainConfig) -> (Vec<String>, Vec<String>) {
    let mut by_label: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    let mut seen = BTreeMap::new();
    for s in samples {
        if seen.insert(s.group.clone(), s.label).is_none() {
            by_label.entry(s.label).or_default().push(s.group.clone());
        }
    }
    let (mut train, mut val) = (Vec::new(), Vec::new());
    if cfg.val_fraction > 0.0 {
        for (label, mut groups) in by_label.clone() {
            groups.sort();
            groups.shuffle(&mut derive_rng(cfg.seed, &["validation", &label.to_string()]));
            let n_val = ((groups.len() as f64 * cfg.val_fraction).round() as usize).min(groups.len() - 1);
            val.extend(groups.drain(..n_val));
            train.extend(groups);
        }
        if val.is_empty() {
            // Tiny pools: hold out one group from the largest class that can spare it.
            if let Some((_, groups)) = by_label.iter().filter(|(_, g)| g.len() >= 2).max_by_key(|(l, g)| (g.len(), usize::MAX - **l)) {
                let mut sorted = groups.clone();
                sorted.sort();
                let held = sorted[0].clone();
                train.retain(|g| *g != held);
                val.push(held);
            }
        }
    } else {
        train = by_label.into_values().flatten().collect();
    }
    train.sort();
    val.sort();
    (train, val)
}

/// Fits the classifier with Adam, a per-epoch cosine schedule and early
/// stopping on a held-out validation split. Returns the parameters from the
/// epoch with the lowest validation loss.
pub fn train(
    samples: &[TrainSample],
    class_names: &[String],
    input_side: usize,
    channels: usize,
    cfg: &TrainConfig,
) -> Result<(ClassifierModel, TrainHistory), ClfError> {
    cfg.validate()?;
    let k = class_names.len();
    if samples.len() < k.max(2) {
        return Err(ClfError::InsufficientData(samples.len()));
    }
    if let Some(s) = samples.iter().find(|s| s.label >= k) {
        return Err(ClfError::LabelOutOfRange { label: s.label, k });
    }
    let mut labels: Vec<_> = samples.iter().map(|s| s.label).collect();
    labels.sort_unstable();
    labels.dedup();
    if labels.len() < 2 {
        return Err(ClfError::SingleClass);
    }

    let (train_groups, val_groups) = split_groups(samples, cfg);
    let in_val = |s: &TrainSample| val_groups.binary_search(&s.group).is_ok();
    let train_set: Vec<(&[f64], usize)> =
        samples.iter().filter(|s| !in_val(s)).map(|s| (s.features.as_slice(), s.label)).collect();
    let mut val_set: Vec<(&[f64], usize)> = Vec::new();
    for g in &val_groups {
        let members: Vec<_> = samples.iter().filter(|s| &s.group == g).collect();
        let views: Vec<_> = members.iter().filter(|s| s.is_eval_view).collect();
        let chosen: Vec<&TrainSample> = if views.is_empty() { members.clone() } else { views.into_iter().copied().collect() };
        val_set.extend(chosen.into_iter().map(|s| (s.features.as_slice(), s.label)));
    }
    if train_set.is_empty() || train_groups.is_empty() {
        return Err(ClfError::InsufficientData(samples.len()));
    }

    let mut model = ClassifierModel::zeros(class_names.to_vec(), input_side, channels);
    model.config_echo = cfg.echo();
    let d = model.n_features();
    if let Some((x, _)) = train_set.iter().find(|(x, _)| x.len() != d) {
        return Err(ClfError::DimensionMismatch { expected: d, actual: x.len() });
    }

    let n_params = model.weights.len() + model.bias.len();
    let mut adam = Adam::new(n_params, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
    let mut params: Vec<f64> = model.weights.iter().chain(&model.bias).copied().collect();
    let n_weights = model.weights.len();
    let mut rng = derive_rng(cfg.seed, &["batches"]);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut stopper = EarlyStopping::new(cfg.patience);
    let mut history = TrainHistory::default();
    let mut best_params = params.clone();
    let mut grad_buf = vec![0.0; n_params];

    let sync = |m: &mut ClassifierModel, p: &[f64]| {
        m.weights.copy_from_slice(&p[..n_weights]);
        m.bias.copy_from_slice(&p[n_weights..]);
    };

    for epoch in 0..cfg.max_epochs {
        let lr = cosine_lr(epoch, cfg.max_epochs, cfg.lr0);
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<_> = chunk.iter().map(|&i| train_set[i]).collect();
            let (loss, grads) = loss_and_grad(&model, &batch)?;
            loss_sum += loss * batch.len() as f64;
            grad_buf[..n_weights].copy_from_slice(&grads.weights);
            grad_buf[n_weights..].copy_from_slice(&grads.bias);
            adam.step(&mut params, &grad_buf, lr)?;
            sync(&mut model, &params);
        }
        if params.iter().any(|v| !v.is_finite()) {
            return Err(ClfError::NonFinite);
        }
        let train_loss = loss_sum / train_set.len() as f64;
        let val_loss = if val_set.is_empty() { mean_loss(&model, &train_set)? } else { mean_loss(&model, &val_set)? };
        history.epochs.push(EpochRecord { epoch, lr, train_loss, val_loss });
        let (improved, stop) = stopper.observe(val_loss);
        if improved {
            best_params.copy_from_slice(&params);
            history.best_epoch = epoch;
            history.best_val_loss = val_loss;
        }
        if stop {
            history.stopped_early = true;
            break;
        }
    }
    sync(&mut model, &best_params);
    Ok((model, history))
}
