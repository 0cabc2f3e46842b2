//! Generates a synthetic dataset on disk and reads it back through the
//! manifest loader.
//!
//! ```text
//! cargo run --example synth_dataset -- [out_dir] [n_sequences] [n_classes]
//! ```

use dualdi::frameseq::{load_sequence, parse_manifest};
use dualdi::synthgen::{synth_dataset, write_dataset, JitterSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let out = args.next().unwrap_or_else(|| "synthetic".into());
    let n: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(15);
    let k: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(3);

    let data = synth_dataset(n, k, 42, &JitterSpec::default())?;
    let manifest_path = write_dataset(&data, out.as_ref())?;
    println!("wrote {}", manifest_path.display());

    let manifest = parse_manifest(&manifest_path)?;
    for entry in manifest.entries.iter().take(5) {
        let seq = load_sequence(&manifest, entry, false)?;
        let a = &entry.annotation;
        let (w, h, c) = seq.dims();
        println!(
            "{} {} {:<12} frames={} {w}x{h}x{c} onset={} apex={} offset={}",
            a.sequence_id, a.subject_id, a.label, seq.frame_count(), a.onset, a.apex, a.offset
        );
    }
    println!("labels: {:?}", manifest.label_vocabulary);
    Ok(())
}
