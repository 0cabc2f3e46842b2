//! Expands a handful of clips with dual-phase, flip and rotation
//! augmentation and writes the samples plus their index.
//!
//! ```text
//! cargo run --example spatial_augment -- [out_dir]
//! ```

use dualdi::augment::{expand_training_set, write_samples, AugmentConfig, SplitRole};
use dualdi::synthgen::{synth_dataset, JitterSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "augmented".into());
    let data = synth_dataset(4, 2, 42, &JitterSpec::default())?;
    let cfg = AugmentConfig {
        enable_dual_di: true,
        enable_flip: true,
        enable_rotation: true,
        rotation_limit: 10.0,
        seed: 42,
        output_size: 224,
    };
    let expansion = expand_training_set(&data.manifest, &data.sequences, &cfg)?;
    for s in &expansion.samples {
        println!("{:<36} {:<10} {}", s.file_name(), s.label, s.split_role.as_str());
    }
    let eval = expansion.samples.iter().filter(|s| s.split_role == SplitRole::Eval).count();
    println!("{} samples, {eval} usable for evaluation", expansion.samples.len());
    let index = write_samples(&expansion.samples, out.as_ref())?;
    println!("index: {}", index.display());
    Ok(())
}
