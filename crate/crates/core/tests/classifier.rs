use dualdi::frameseq::ByteImage;
use dualdi::refclf::{
    featurize, load_model, mean_loss, predict, save_model, train, TrainConfig, TrainSample,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SIDE: usize = 8;

/// Noisy 32x32 gray images: class 0 has a bright left half, class 1 a bright
/// right half. A linear model separates them.
fn blob_image(rng: &mut ChaCha8Rng, class: usize) -> ByteImage {
    let data = (0..32 * 32)
        .map(|i| {
            let left = i % 32 < 16;
            let base: f64 = if left == (class == 0) { 180.0 } else { 70.0 };
            (base + rng.random_range(-40.0..40.0)).round() as u8
        })
        .collect();
    ByteImage::new(32, 32, 1, data).unwrap()
}

fn dataset(n: usize, seed: u64) -> (Vec<ByteImage>, Vec<TrainSample>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let images: Vec<ByteImage> = (0..n).map(|i| blob_image(&mut rng, i % 2)).collect();
    let samples = images
        .iter()
        .enumerate()
        .map(|(i, img)| TrainSample {
            features: featurize(img, SIDE).unwrap(),
            label: i % 2,
            group: format!("clip{i}"),
            is_eval_view: true,
        })
        .collect();
    (images, samples)
}

fn names() -> Vec<String> {
    vec!["left".into(), "right".into()]
}

#[test]
fn separable_classes_reach_high_training_accuracy() {
    let (images, samples) = dataset(100, 1);
    let (model, history) = train(&samples, &names(), SIDE, 1, &TrainConfig::default()).unwrap();
    let correct = images.iter().enumerate().filter(|(i, img)| predict(&model, img).unwrap() == i % 2).count();
    let acc = correct as f64 / images.len() as f64;
    assert!(acc >= 0.95, "training accuracy {acc}");
    assert!(history.epochs.len() <= 50);
    assert!(history.epochs.last().unwrap().train_loss < history.epochs[0].train_loss);
}

#[test]
fn training_is_deterministic() {
    let (_, samples) = dataset(60, 2);
    let cfg = TrainConfig { max_epochs: 10, seed: 9, ..TrainConfig::default() };
    let (m1, h1) = train(&samples, &names(), SIDE, 1, &cfg).unwrap();
    let (m2, h2) = train(&samples, &names(), SIDE, 1, &cfg).unwrap();
    assert_eq!(h1, h2);
    assert_eq!(m1, m2);
    let (m3, _) = train(&samples, &names(), SIDE, 1, &TrainConfig { seed: 10, ..cfg }).unwrap();
    assert_ne!(m1, m3);
}

#[test]
fn returned_parameters_come_from_the_best_epoch() {
    let (_, samples) = dataset(80, 3);
    // A large learning rate makes validation loss oscillate.
    let cfg = TrainConfig { lr0: 0.05, max_epochs: 30, patience: 4, ..TrainConfig::default() };
    let (_, history) = train(&samples, &names(), SIDE, 1, &cfg).unwrap();
    let min = history.epochs.iter().map(|e| e.val_loss).fold(f64::INFINITY, f64::min);
    assert_eq!(history.best_val_loss, min);
    assert_eq!(history.epochs[history.best_epoch].val_loss, min);
    for (t, e) in history.epochs.iter().enumerate() {
        assert_eq!(e.epoch, t);
        assert_eq!(e.lr, dualdi::refclf::cosine_lr(t, cfg.max_epochs, cfg.lr0));
    }
    if history.stopped_early {
        assert_eq!(history.epochs.len(), history.best_epoch + 1 + cfg.patience);
    }
}

#[test]
fn checkpoint_round_trip_preserves_predictions() {
    let (images, samples) = dataset(40, 4);
    let cfg = TrainConfig { max_epochs: 5, ..TrainConfig::default() };
    let (model, _) = train(&samples, &names(), SIDE, 1, &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.txt");
    save_model(&model, &path).unwrap();
    let back = load_model(&path).unwrap();
    assert_eq!(back, model);
    for img in &images {
        assert_eq!(predict(&back, img).unwrap(), predict(&model, img).unwrap());
    }
    let batch: Vec<(&[f64], usize)> = samples.iter().map(|s| (s.features.as_slice(), s.label)).collect();
    assert_eq!(mean_loss(&back, &batch).unwrap(), mean_loss(&model, &batch).unwrap());
}
