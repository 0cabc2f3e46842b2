//! Trains the softmax classifier on full-clip and phase images of a
//! synthetic training split, evaluates on held-out full images, and saves
//! a checkpoint.
//!
//! ```text
//! cargo run --release --example train_classifier -- [model_path]
//! ```

use dualdi::augment::{expand_training_set, AugmentConfig, SplitRole};
use dualdi::evalkit::{accuracy, confusion_matrix, uf1};
use dualdi::refclf::{featurize, predict, save_model, train, TrainConfig, TrainSample, DEFAULT_INPUT_SIDE};
use dualdi::synthgen::{synth_dataset, JitterSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model_path = std::env::args().nth(1).unwrap_or_else(|| "classifier.model".into());
    let data = synth_dataset(90, 3, 42, &JitterSpec::default())?;
    let cfg = AugmentConfig { enable_dual_di: true, ..AugmentConfig::default() };
    let expansion = expand_training_set(&data.manifest, &data.sequences, &cfg)?;

    // Every fifth clip is held out.
    let held_out = |origin: &str| origin[1..].parse::<usize>().is_ok_and(|i| i % 5 == 0);
    let label_of = |l: &str| data.manifest.label_index(l).expect("known label");
    let mut samples = Vec::new();
    for s in expansion.samples.iter().filter(|s| !held_out(&s.origin)) {
        samples.push(TrainSample {
            features: featurize(&s.image, DEFAULT_INPUT_SIDE)?,
            label: label_of(&s.label),
            group: s.origin.clone(),
            is_eval_view: s.split_role == SplitRole::Eval,
        });
    }
    let labels = data.manifest.label_vocabulary.clone();
    let (model, history) = train(&samples, &labels, DEFAULT_INPUT_SIDE, 3, &TrainConfig::default())?;
    for e in &history.epochs {
        println!("epoch {:>2} lr {:.2e} train {:.4} val {:.4}", e.epoch, e.lr, e.train_loss, e.val_loss);
    }
    println!("best epoch {}, stopped early: {}", history.best_epoch, history.stopped_early);

    let test: Vec<_> = expansion
        .samples
        .iter()
        .filter(|s| held_out(&s.origin) && s.split_role == SplitRole::Eval)
        .collect();
    let truth: Vec<usize> = test.iter().map(|s| label_of(&s.label)).collect();
    let preds = test.iter().map(|s| predict(&model, &s.image)).collect::<Result<Vec<_>, _>>()?;
    let cm = confusion_matrix(&truth, &preds, labels.len())?;
    println!("held-out clips: {} accuracy {:.3} UF1 {:.3}", test.len(), accuracy(&cm)?, uf1(&cm)?);

    save_model(&model, model_path.as_ref())?;
    println!("saved {model_path}");
    Ok(())
}
