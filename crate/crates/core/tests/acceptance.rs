//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any failed.
//!
//! Golden images live in `tests/golden`; regenerate them with
//! `UPDATE_GOLDEN=1 cargo test --test acceptance`.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use dualdi::augment::{encode_offset_phase, encode_onset_phase, finalize_image};
use dualdi::evalkit::{accuracy, uar, uf1, ConfusionMatrix};
use dualdi::experiment::{compare, AugMode, ExperimentConfig};
use dualdi::frameseq::{ByteImage, Frame};
use dualdi::rankpool::{arp_weights, encode_full, rank_pool, reversed_arp_weights};
use dualdi::refclf::{cosine_lr, loss_and_grad, mean_loss, Adam, ClassifierModel};
use dualdi::synthgen::{synth_dataset, JitterSpec};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:.2?}, limit {limit:?}"))
}

// ---------------------------------------------------------------- 1

fn weight_identities() -> Check {
    let start = Instant::now();
    for t in 1..=1000usize {
        let fw = arp_weights(t).map_err(|e| e.to_string())?;
        let rev = reversed_arp_weights(t).map_err(|e| e.to_string())?;
        let oracle: Vec<i64> = (1..=t as i64).map(|i| 2 * i - t as i64 - 1).collect();
        ensure(fw.values() == oracle.as_slice(), || format!("T={t}: forward weights differ from 2t-T-1"))?;
        ensure(fw.values().iter().sum::<i64>() == 0, || format!("T={t}: forward sum nonzero"))?;
        ensure(rev.values().iter().sum::<i64>() == 0, || format!("T={t}: reversed sum nonzero"))?;
        let reversed_fw: Vec<i64> = fw.values().iter().rev().copied().collect();
        let negated_fw: Vec<i64> = fw.values().iter().map(|v| -v).collect();
        ensure(rev.values() == reversed_fw.as_slice(), || format!("T={t}: reversed != reverse(forward)"))?;
        ensure(rev.values() == negated_fw.as_slice(), || format!("T={t}: reversed != -forward"))?;
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(1))?;
    Ok(format!("T = 1..1000 in {elapsed:.1?}"))
}

// ---------------------------------------------------------------- 2

fn random_frame(rng: &mut ChaCha8Rng, w: usize, h: usize, c: usize) -> Frame {
    let data = (0..w * h * c).map(|_| rng.random_range(-300.0..300.0)).collect();
    Frame::new(w, h, c, data).unwrap()
}

/// Straightforward per-sample weighted sum, weights computed from the formula.
fn naive_pool(frames: &[Frame]) -> Vec<f64> {
    let t_len = frames.len() as f64;
    let n = frames[0].data().len();
    (0..n)
        .map(|p| {
            frames
                .iter()
                .enumerate()
                .map(|(i, f)| (2.0 * (i as f64 + 1.0) - t_len - 1.0) * f.data()[p])
                .sum()
        })
        .collect()
}

fn pooling_properties() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xD1);
    let cases = 250;
    for case in 0..cases {
        let (w, h) = (rng.random_range(1..=16), rng.random_range(1..=16));
        let c = if rng.random_bool(0.5) { 1 } else { 3 };
        let t = rng.random_range(1..=12);
        let fw = arp_weights(t).unwrap();
        let rev = reversed_arp_weights(t).unwrap();
        let xs: Vec<Frame> = (0..t).map(|_| random_frame(&mut rng, w, h, c)).collect();
        let ys: Vec<Frame> = (0..t).map(|_| random_frame(&mut rng, w, h, c)).collect();
        let ctx = |what: &str| format!("case {case} ({w}x{h}x{c}, T={t}): {what}");

        let constant = vec![xs[0].clone(); t];
        let pooled = rank_pool(&constant, &fw).unwrap();
        ensure(pooled.data().iter().all(|&v| v == 0.0), || ctx("constant sequence not exactly zero"))?;

        let forward = rank_pool(&xs, &fw).unwrap();
        let backward: Vec<Frame> = xs.iter().rev().cloned().collect();
        ensure(rank_pool(&backward, &rev).unwrap() == forward, || ctx("reversed weights on reversed frames differ"))?;
        ensure(
            rank_pool(&xs, &rev).unwrap() == rank_pool(&backward, &fw).unwrap(),
            || ctx("time-reversal identity"),
        )?;

        let oracle = naive_pool(&xs);
        let scale: f64 = fw.values().iter().map(|a| a.unsigned_abs() as f64).sum::<f64>() * 300.0;
        for (a, b) in forward.data().iter().zip(&oracle) {
            ensure((a - b).abs() <= 1e-12 * scale, || ctx("differs from naive oracle"))?;
        }

        let (a, b) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let mixed: Vec<Frame> = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| {
                let data = x.data().iter().zip(y.data()).map(|(p, q)| a * p + b * q).collect();
                Frame::new(w, h, c, data).unwrap()
            })
            .collect();
        let lhs = rank_pool(&mixed, &fw).unwrap();
        let px = forward.data();
        let py = rank_pool(&ys, &fw).unwrap();
        let bound = 1e-9 * scale * (a.abs() + b.abs()).max(1.0);
        for ((l, x), y) in lhs.data().iter().zip(px).zip(py.data()) {
            ensure((l - (a * x + b * y)).abs() <= bound, || ctx("affine linearity"))?;
        }

        let pair = [xs[0].clone(), ys[0].clone()];
        let diff = rank_pool(&pair, &arp_weights(2).unwrap()).unwrap();
        for ((d, f1), f2) in diff.data().iter().zip(xs[0].data()).zip(ys[0].data()) {
            ensure(*d == f2 - f1, || ctx("T=2 is not the frame difference"))?;
        }
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(10))?;
    Ok(format!("{cases} random cases in {elapsed:.1?}"))
}

// ---------------------------------------------------------------- 3

struct OracleMetrics {
    acc: f64,
    uf1: f64,
    uar: f64,
}

/// Expands the matrix into individual (truth, prediction) pairs and counts
/// TP/FP/FN per class by scanning them.
fn brute_force_metrics(counts: &[Vec<u64>]) -> OracleMetrics {
    let k = counts.len();
    let mut pairs = Vec::new();
    for (t, row) in counts.iter().enumerate() {
        for (p, &n) in row.iter().enumerate() {
            pairs.extend(std::iter::repeat_n((t, p), n as usize));
        }
    }
    let correct = pairs.iter().filter(|(t, p)| t == p).count();
    let (mut f1s, mut recalls) = (Vec::new(), Vec::new());
    for c in 0..k {
        let (mut tp, mut fp, mut fneg) = (0.0, 0.0, 0.0);
        for &(t, p) in &pairs {
            match (t == c, p == c) {
                (true, true) => tp += 1.0,
                (false, true) => fp += 1.0,
                (true, false) => fneg += 1.0,
                _ => {}
            }
        }
        if tp + fp + fneg > 0.0 {
            let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
            let recall = if tp + fneg > 0.0 { tp / (tp + fneg) } else { 0.0 };
            let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
            f1s.push(f1);
        }
        if tp + fneg > 0.0 {
            recalls.push(tp / (tp + fneg));
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    OracleMetrics { acc: correct as f64 / pairs.len() as f64, uf1: mean(&f1s), uar: mean(&recalls) }
}

fn metric_oracle() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xD3);
    let cases = 200;
    for case in 0..cases {
        let k = rng.random_range(2..=6);
        let mut counts: Vec<Vec<u64>> =
            (0..k).map(|_| (0..k).map(|_| if rng.random_bool(0.2) { 0 } else { rng.random_range(0..=50) }).collect()).collect();
        if counts.iter().flatten().all(|&v| v == 0) {
            counts[0][0] = 1;
        }
        let cm = ConfusionMatrix::from_counts(counts.clone()).unwrap();
        let oracle = brute_force_metrics(&counts);
        let got = (accuracy(&cm).unwrap(), uf1(&cm).unwrap(), uar(&cm).unwrap());
        let ctx = |m: &str| format!("case {case} (K={k}): {m} {counts:?}");
        ensure((got.0 - oracle.acc).abs() <= 1e-12, || ctx("accuracy"))?;
        ensure((got.1 - oracle.uf1).abs() <= 1e-12, || ctx("uf1"))?;
        ensure((got.2 - oracle.uar).abs() <= 1e-12, || ctx("uar"))?;

        let mut perm: Vec<usize> = (0..k).collect();
        perm.shuffle(&mut rng);
        let mut permuted = vec![vec![0; k]; k];
        for i in 0..k {
            for j in 0..k {
                permuted[perm[i]][perm[j]] = counts[i][j];
            }
        }
        let pm = ConfusionMatrix::from_counts(permuted).unwrap();
        let again = (accuracy(&pm).unwrap(), uf1(&pm).unwrap(), uar(&pm).unwrap());
        ensure(again == got, || ctx("not permutation invariant"))?;
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(5))?;
    Ok(format!("{cases} random matrices in {elapsed:.1?}"))
}

// ---------------------------------------------------------------- 4

/// Weights first, then biases.
fn param(m: &mut ClassifierModel, i: usize) -> &mut f64 {
    let n = m.weights.len();
    if i < n {
        &mut m.weights[i]
    } else {
        &mut m.bias[i - n]
    }
}

fn gradient_check() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xD4);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for case in 0..20 {
        let k = rng.random_range(2..=5);
        let side = rng.random_range(2..=4);
        let channels = if rng.random_bool(0.5) { 1 } else { 3 };
        let names = (0..k).map(|i| format!("c{i}")).collect();
        let mut model = ClassifierModel::zeros(names, side, channels);
        model.weights.iter_mut().for_each(|w| *w = rng.random_range(-1.0..1.0));
        model.bias.iter_mut().for_each(|b| *b = rng.random_range(-1.0..1.0));
        let d = model.n_features();
        let n = rng.random_range(1..=8);
        let xs: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
        let batch: Vec<(&[f64], usize)> = xs.iter().map(|x| (x.as_slice(), rng.random_range(0..k))).collect();

        let (_, grads) = loss_and_grad(&model, &batch).map_err(|e| e.to_string())?;
        let analytic: Vec<f64> = grads.weights.iter().chain(&grads.bias).copied().collect();
        for (i, &a) in analytic.iter().enumerate() {
            let mut probe = model.clone();
            let base = *param(&mut probe, i);
            *param(&mut probe, i) = base + h;
            let up = mean_loss(&probe, &batch).unwrap();
            *param(&mut probe, i) = base - h;
            let down = mean_loss(&probe, &batch).unwrap();
            let numeric = (up - down) / (2.0 * h);
            // Relative error with a small floor so near-zero components compare absolutely.
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
            ensure(rel < 1e-4, || format!("case {case}, parameter {i}: analytic {a} vs numeric {numeric}"))?;
        }
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(30))?;
    Ok(format!("20 model/batch pairs, max relative error {worst:.2e}, {elapsed:.1?}"))
}

// ---------------------------------------------------------------- 5

fn schedule_and_optimizer() -> Check {
    let lr0 = 1e-4;
    ensure((cosine_lr(0, 50, lr0) - lr0).abs() <= 1e-12, || "lr(0) != lr0".into())?;
    ensure(cosine_lr(50, 50, lr0).abs() <= 1e-12, || "lr(T_max) != 0".into())?;
    ensure((cosine_lr(25, 50, lr0) - lr0 / 2.0).abs() <= 1e-12, || "lr(T_max/2) != lr0/2".into())?;

    let mut adam = Adam::new(1, 0.9, 0.999, 1e-8);
    let mut p = [0.0];
    adam.step(&mut p, &[1.0], 0.001).map_err(|e| e.to_string())?;
    // Step 1: m_hat = g = 1 and v_hat = g^2 = 1.
    let oracle = -0.001 * 1.0 / (1.0f64.sqrt() + 1e-8);
    ensure((p[0] - oracle).abs() <= 1e-9, || format!("adam step {} vs {oracle}", p[0]))?;
    ensure((p[0] + 0.001).abs() <= 1e-9, || format!("adam step {} vs -0.001", p[0]))?;
    Ok(format!("lr endpoints/midpoint exact, first Adam step {:.12}", p[0]))
}

// ---------------------------------------------------------------- 6

fn dual_vs_baseline() -> Check {
    let start = Instant::now();
    // One worker thread: the budget is stated for a single core.
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().map_err(|e| e.to_string())?;
    let seeds = [1u64, 2, 3];
    let cmp = pool.install(|| {
        let data = synth_dataset(150, 3, 42, &JitterSpec::default()).map_err(|e| e.to_string())?;
        compare(&data.manifest, &data.sequences, &ExperimentConfig::default(), &seeds).map_err(|e| e.to_string())
    })?;
    let elapsed = start.elapsed();

    let mut wins = 0;
    let mut lines = Vec::new();
    for seed in seeds {
        let none = &cmp.report(AugMode::None, seed).ok_or("missing none report")?.aggregate;
        let dual = &cmp.report(AugMode::Dual, seed).ok_or("missing dual report")?.aggregate;
        lines.push(format!(
            "seed {seed}: none acc {:.3} uf1 {:.3}, dual acc {:.3} uf1 {:.3}",
            none.acc.mean, none.uf1.mean, dual.acc.mean, dual.uf1.mean
        ));
        ensure((0.55..=0.85).contains(&none.acc.mean), || {
            format!("seed {seed}: baseline accuracy {:.3} outside 0.55-0.85", none.acc.mean)
        })?;
        ensure(dual.uf1.mean >= none.uf1.mean - 0.01, || {
            format!("seed {seed}: dual UF1 {:.4} < none UF1 {:.4} - 0.01", dual.uf1.mean, none.uf1.mean)
        })?;
        if dual.acc.mean >= none.acc.mean {
            wins += 1;
        }
    }
    ensure(wins >= 2, || format!("dual >= none accuracy on only {wins}/3 seeds; {}", lines.join("; ")))?;
    within(elapsed, Duration::from_secs(300))?;
    Ok(format!("dual >= none on {wins}/3 seeds ({}), {elapsed:.1?}", lines.join("; ")))
}

// ---------------------------------------------------------------- CLI helpers

fn dualdi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dualdi")).args(args).output().expect("binary runs")
}

fn run_ok(args: &[&str]) -> Result<Output, String> {
    let out = dualdi(args);
    ensure(out.status.success(), || {
        format!("`dualdi {}` exited {:?}: {}", args.join(" "), out.status.code(), String::from_utf8_lossy(&out.stderr))
    })?;
    Ok(out)
}

fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

fn png_files(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "png"))
        .collect();
    v.sort();
    v
}

// ---------------------------------------------------------------- 7

fn determinism() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = tmp.path();
    let data = root.join("data");
    run_ok(&["synth", "--n", "30", "--classes", "3", "--seed", "11", "--out", s(&data)])?;
    let manifest = data.join("manifest.csv");

    let reports: Vec<Vec<u8>> = ["a", "b"]
        .iter()
        .map(|name| {
            let report = root.join(format!("{name}.json"));
            run_ok(&["experiment", "--manifest", s(&manifest), "--aug", "dual", "--seed", "5", "--report", s(&report)])?;
            std::fs::read(&report).map_err(|e| e.to_string())
        })
        .collect::<Result<_, _>>()?;
    ensure(reports[0] == reports[1], || "experiment reports differ between identical runs".into())?;

    let (one, eight) = (root.join("jobs1"), root.join("jobs8"));
    run_ok(&["encode", "--manifest", s(&manifest), "--mode", "dual", "--jobs", "1", "--out", s(&one)])?;
    run_ok(&["encode", "--manifest", s(&manifest), "--mode", "dual", "--jobs", "8", "--out", s(&eight)])?;
    let files = png_files(&one);
    ensure(files.len() == 90, || format!("expected 90 PNGs, found {}", files.len()))?;
    for f in files.iter().chain(std::iter::once(&one.join("index.csv"))) {
        let other = eight.join(f.file_name().unwrap());
        ensure(std::fs::read(f).ok() == std::fs::read(&other).ok(), || format!("{} differs across --jobs", other.display()))?;
    }
    Ok(format!("report JSON identical ({} bytes); 90 PNGs identical for --jobs 1 vs 8", reports[0].len()))
}

// ---------------------------------------------------------------- 8

fn cli_round_trip() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = tmp.path();
    let data = root.join("data");
    run_ok(&["synth", "--n", "10", "--classes", "3", "--out", s(&data)])?;
    let manifest = data.join("manifest.csv");
    let enc = root.join("enc");
    run_ok(&["encode", "--manifest", s(&manifest), "--mode", "dual", "--out", s(&enc)])?;

    let files = png_files(&enc);
    ensure(files.len() == 30, || format!("expected 30 PNGs, found {}", files.len()))?;
    let expected: BTreeSet<String> = (0..10)
        .flat_map(|i| ["full", "onset", "offset"].map(|p| format!("s{i:04}__{p}.png")))
        .collect();
    let found: BTreeSet<String> = files.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
    ensure(found == expected, || format!("unexpected file names: {found:?}"))?;
    for f in &files {
        let img = ByteImage::load(f).map_err(|e| e.to_string())?;
        ensure((img.width(), img.height()) == (224, 224), || format!("{} is {}x{}", f.display(), img.width(), img.height()))?;
    }

    // Collapse the falling phase of the fourth clip: apex = offset.
    let text = std::fs::read_to_string(&manifest).map_err(|e| e.to_string())?;
    let edited: Vec<String> = text
        .lines()
        .map(|line| {
            let mut cols: Vec<String> = line.split(',').map(str::to_string).collect();
            if cols[0] == "s0003" {
                cols[5] = cols[4].clone();
            }
            cols.join(",")
        })
        .collect();
    let degenerate = data.join("degenerate.csv");
    std::fs::write(&degenerate, edited.join("\n") + "\n").map_err(|e| e.to_string())?;
    let enc2 = root.join("enc2");
    let out = run_ok(&["encode", "--manifest", s(&degenerate), "--mode", "dual", "--out", s(&enc2)])?;
    let n = png_files(&enc2).len();
    ensure(n == 29, || format!("expected 29 PNGs with one degenerate phase, found {n}"))?;
    ensure(!enc2.join("s0003__offset.png").exists(), || "degenerate offset image was written".into())?;
    let stderr = String::from_utf8_lossy(&out.stderr);
    let warnings: Vec<&str> = stderr.lines().filter(|l| l.starts_with("warning:")).collect();
    ensure(warnings.len() == 1 && warnings[0].contains("s0003"), || format!("expected one warning naming s0003, got {stderr:?}"))?;
    ensure(String::from_utf8_lossy(&out.stdout).lines().count() == 1, || "stdout is not a single summary line".into())?;
    Ok("30 PNGs at 224x224 with conventional names; 29 PNGs + 1 warning for apex = offset".into())
}

// ---------------------------------------------------------------- 9

fn golden_images() -> Check {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("golden");
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    let jitter = JitterSpec { width: 32, height: 32, ..JitterSpec::default() };
    let data = synth_dataset(3, 3, 2024, &jitter).map_err(|e| e.to_string())?;
    let mut checked = 0;
    for (entry, seq) in data.manifest.entries.iter().zip(&data.sequences) {
        let ann = &entry.annotation;
        let phases = [
            Some(encode_full(seq, ann).map_err(|e| e.to_string())?),
            encode_onset_phase(seq, ann).map_err(|e| e.to_string())?,
            encode_offset_phase(seq, ann).map_err(|e| e.to_string())?,
        ];
        for di in phases.into_iter().flatten() {
            let png = finalize_image(&di, 224).and_then(|img| img.encode_png()).map_err(|e| e.to_string())?;
            let path = dir.join(format!("{}__{}.png", ann.sequence_id, di.phase));
            if update {
                std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
                std::fs::write(&path, &png).map_err(|e| e.to_string())?;
            } else {
                let stored = std::fs::read(&path).map_err(|e| format!("{}: {e}", path.display()))?;
                ensure(stored == png, || format!("{} changed", path.display()))?;
            }
            checked += 1;
        }
    }
    ensure(checked == 9, || format!("expected 9 golden images, produced {checked}"))?;
    Ok(format!("{checked} images {}", if update { "regenerated" } else { "byte-identical" }))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("weight identities", weight_identities),
        ("pooling properties", pooling_properties),
        ("metric oracle equivalence", metric_oracle),
        ("gradient check", gradient_check),
        ("schedule and optimizer units", schedule_and_optimizer),
        ("dual-phase vs baseline", dual_vs_baseline),
        ("determinism", determinism),
        ("cli round trip", cli_round_trip),
        ("golden images", golden_images),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        match result {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail})", i + 1),
            Err(reason) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({reason})", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
