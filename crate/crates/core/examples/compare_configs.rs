//! Runs all four augmentation configurations over a synthetic dataset and
//! prints a summary table.
//!
//! ```text
//! cargo run --release --example compare_configs -- [n_sequences] [noise_sigma]
//! ```

use dualdi::experiment::{compare, AugMode, ExperimentConfig};
use dualdi::synthgen::{synth_dataset, JitterSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(150);
    let mut jitter = JitterSpec::default();
    if let Some(sigma) = args.next() {
        jitter.noise_sigma = sigma.parse()?;
    }
    let data = synth_dataset(n, 3, 42, &jitter)?;
    let seeds = [1, 2, 3];
    let start = std::time::Instant::now();
    let cmp = compare(&data.manifest, &data.sequences, &ExperimentConfig::default(), &seeds)?;

    println!("{:<18} {:>8} {:>8} {:>8}", "seed/config", "acc", "uf1", "uar");
    for seed in seeds {
        for mode in AugMode::ALL {
            let r = cmp.report(mode, seed).expect("every pair is run");
            let a = &r.aggregate;
            println!("{:<18} {:>8.4} {:>8.4} {:>8.4}", format!("{seed}/{mode}"), a.acc.mean, a.uf1.mean, a.uar.mean);
        }
    }
    println!();
    print!("{}", cmp.summary_csv());
    println!("elapsed {:.1?}", start.elapsed());
    Ok(())
}
