//! Procedural micro-motion clips with known onset/apex/offset.
//!
//! A clip is a fixed smooth "face" with two dark eye blobs and a mouth bar.
//! One class-specific feature moves or deforms with displacement
//! `peak_amplitude * intensity(t)`, where intensity rises from 0 at onset to 1
//! at apex and falls back to 0 at offset along smoothstep easing.

use std::path::{Path, PathBuf};

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Normal};

use crate::frameseq::{
    write_manifest, ByteImage, DatasetManifest, ExpressionAnnotation, Frame, FrameError, FrameSequence, ManifestEntry,
};
use crate::seed::derive_rng;

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("frame index {t} outside 1..={n_frames}")]
    IndexOutOfRange { t: usize, n_frames: usize },
    #[error("requested {requested} classes but only {available} motion patterns exist")]
    TooManyClasses { requested: usize, available: usize },
    #[error("invalid synthesis parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Frame(#[from] FrameError),
}

/// Which facial element moves, and how.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MotionClass {
    MouthRaise,
    BrowRaise,
    MouthWiden,
    EyesNarrow,
    MouthDrop,
    BrowLower,
}

impl MotionClass {
    pub const ALL: [MotionClass; 6] = [
        MotionClass::MouthRaise,
        MotionClass::BrowRaise,
        MotionClass::MouthWiden,
        MotionClass::EyesNarrow,
        MotionClass::MouthDrop,
        MotionClass::BrowLower,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MotionClass::MouthRaise => "mouth_raise",
            MotionClass::BrowRaise => "brow_raise",
            MotionClass::MouthWiden => "mouth_widen",
            MotionClass::EyesNarrow => "eyes_narrow",
            MotionClass::MouthDrop => "mouth_drop",
            MotionClass::BrowLower => "brow_lower",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub width: usize,
    pub height: usize,
    pub n_frames: usize,
    pub onset: usize,
    pub apex: usize,
    pub offset: usize,
    pub motion_class: MotionClass,
    /// Peak displacement in pixels.
    pub peak_amplitude: f64,
    /// Standard deviation of additive Gaussian pixel noise.
    pub noise_sigma: f64,
    /// Whole-face translation in pixels (per-subject placement).
    pub face_shift: (f64, f64),
    pub seed: u64,
    pub sequence_id: String,
    pub subject_id: String,
}

impl SynthParams {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::InvalidParams(m.to_string()));
        if self.width < 8 || self.height < 8 {
            return bad("width and height must be at least 8");
        }
        if !(1 <= self.onset && self.onset < self.apex && self.apex < self.offset && self.offset <= self.n_frames) {
            return bad("need 1 <= onset < apex < offset <= n_frames");
        }
        if !(self.peak_amplitude >= 0.0 && self.peak_amplitude.is_finite()) {
            return bad("peak_amplitude must be finite and non-negative");
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad("noise_sigma must be finite and non-negative");
        }
        Ok(())
    }

    pub fn annotation(&self) -> ExpressionAnnotation {
        ExpressionAnnotation {
            sequence_id: self.sequence_id.clone(),
            subject_id: self.subject_id.clone(),
            onset: self.onset,
            apex: self.apex,
            offset: self.offset,
            label: self.motion_class.name().to_string(),
        }
    }
}

fn smoothstep(u: f64) -> f64 {
    u * u * (3.0 - 2.0 * u)
}

/// Motion intensity at 1-based frame `t`: zero outside onset..offset, one at
/// the apex, smoothstep easing on both sides.
pub fn intensity_curve(params: &SynthParams, t: usize) -> Result<f64, SynthError> {
    if t == 0 || t > params.n_frames {
        return Err(SynthError::IndexOutOfRange { t, n_frames: params.n_frames });
    }
    let (on, ap, off) = (params.onset, params.apex, params.offset);
    let value = if t <= on || t >= off {
        0.0
    } else if t <= ap {
        smoothstep((t - on) as f64 / (ap - on) as f64)
    } else {
        // Distance to offset rather than from apex, so symmetric annotations
        // give bit-identical values on both sides of the apex.
        smoothstep((off - t) as f64 / (off - ap) as f64)
    };
    Ok(value)
}

struct Blob {
    cx: f64,
    cy: f64,
    rx: f64,
    ry: f64,
    depth: f64,
}

impl Blob {
    /// Anti-aliased coverage in `[0, 1]` with roughly one pixel of edge blur.
    fn coverage(&self, x: f64, y: f64) -> f64 {
        let q = (((x - self.cx) / self.rx).powi(2) + ((y - self.cy) / self.ry).powi(2)).sqrt();
        ((1.0 - q) * self.rx.min(self.ry) + 0.5).clamp(0.0, 1.0)
    }
}

const TINT: [f64; 3] = [1.0, 0.86, 0.74];

fn render(params: &SynthParams, displacement: f64) -> Result<Frame, FrameError> {
    let (w, h) = (params.width as f64, params.height as f64);
    let (sx, sy) = params.face_shift;
    let mut left_eye = Blob { cx: 0.33 * w + sx, cy: 0.38 * h + sy, rx: 0.09 * w, ry: 0.05 * h, depth: 95.0 };
    let mut right_eye = Blob { cx: 0.67 * w + sx, cy: 0.38 * h + sy, rx: 0.09 * w, ry: 0.05 * h, depth: 95.0 };
    let mut mouth = Blob { cx: 0.5 * w + sx, cy: 0.72 * h + sy, rx: 0.18 * w, ry: 0.035 * h, depth: 85.0 };
    let d = displacement;
    match params.motion_class {
        MotionClass::MouthRaise => mouth.cy -= d,
        MotionClass::MouthDrop => mouth.cy += d,
        MotionClass::MouthWiden => mouth.rx += d,
        MotionClass::BrowRaise => {
            left_eye.cy -= d;
            right_eye.cy -= d;
        }
        MotionClass::BrowLower => {
            left_eye.cy += d;
            right_eye.cy += d;
        }
        MotionClass::EyesNarrow => {
            let ry = (left_eye.ry - 0.5 * d).max(0.5);
            left_eye.ry = ry;
            right_eye.ry = ry;
        }
    }
    let blobs = [left_eye, right_eye, mouth];
    let (fcx, fcy) = (0.5 * w + sx, 0.5 * h + sy);
    Frame::from_fn(params.width, params.height, 3, |x, y, c| {
        let (xf, yf) = (x as f64, y as f64);
        let r2 = ((xf - fcx) / (0.48 * w)).powi(2) + ((yf - fcy) / (0.55 * h)).powi(2);
        let shade = 150.0 + 60.0 * (-1.5 * r2).exp();
        let dark: f64 = blobs.iter().map(|b| b.depth * b.coverage(xf, yf)).sum();
        (shade - dark) * TINT[c]
    })
}

/// Renders the clip described by `params` together with its annotation.
/// Samples are rounded to integers, so writing the frames as 8-bit PNG and
/// reading them back is lossless.
pub fn synth_sequence(params: &SynthParams) -> Result<(FrameSequence, ExpressionAnnotation), SynthError> {
    params.validate()?;
    let mut rng = derive_rng(params.seed, &["noise", &params.sequence_id]);
    let noise = if params.noise_sigma > 0.0 {
        Some(Normal::new(0.0, params.noise_sigma).map_err(|e| SynthError::InvalidParams(e.to_string()))?)
    } else {
        None
    };
    let mut frames = Vec::with_capacity(params.n_frames);
    for t in 1..=params.n_frames {
        let clean = render(params, params.peak_amplitude * intensity_curve(params, t)?)?;
        let (w, h, c) = clean.dims();
        let data = clean
            .into_data()
            .into_iter()
            .map(|v| {
                let n = noise.as_ref().map_or(0.0, |d| d.sample(&mut rng));
                (v + n).round().clamp(0.0, 255.0)
            })
            .collect();
        frames.push(Frame::new(w, h, c, data)?);
    }
    Ok((FrameSequence::new(frames, format!("synthetic/{}", params.sequence_id))?, params.annotation()))
}

/// Ranges for per-sequence variation in [`synth_dataset`].
#[derive(Debug, Clone, PartialEq)]
pub struct JitterSpec {
    pub width: usize,
    pub height: usize,
    /// Frames before the onset frame, inclusive range.
    pub lead_in: (usize, usize),
    /// Onset-to-apex length in frames.
    pub rise: (usize, usize),
    /// Apex-to-offset length as a fraction of the rise length. Keeping it
    /// well below one puts the apex late in the clip, so the full-clip
    /// dynamic image carries the motion pattern with the same sign as the
    /// phase images; a symmetric profile cancels out.
    pub fall_ratio: (f64, f64),
    /// Frames after the offset frame.
    pub tail: (usize, usize),
    pub amplitude: (f64, f64),
    pub noise_sigma: f64,
    pub n_subjects: usize,
    /// Maximum per-subject face translation in pixels.
    pub max_face_shift: f64,
}

impl Default for JitterSpec {
    fn default() -> Self {
        Self {
            width: 64,
            height: 64,
            lead_in: (1, 4),
            rise: (6, 10),
            fall_ratio: (0.35, 0.7),
            tail: (1, 4),
            amplitude: (1.5, 3.0),
            noise_sigma: 24.0,
            n_subjects: 10,
            max_face_shift: 3.0,
        }
    }
}

/// Generated clips, aligned index-for-index with the manifest entries.
#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub manifest: DatasetManifest,
    pub sequences: Vec<FrameSequence>,
    pub params: Vec<SynthParams>,
}

fn draw_usize(rng: &mut impl RngCore, (lo, hi): (usize, usize)) -> usize {
    if hi <= lo { lo } else { rng.random_range(lo..=hi) }
}

fn draw_f64(rng: &mut impl RngCore, (lo, hi): (f64, f64)) -> f64 {
    if hi <= lo { lo } else { rng.random_range(lo..=hi) }
}

/// Parameters for a balanced dataset: sequence `i` gets class `i % n_classes`,
/// and each subject owns consecutive blocks of `n_classes` sequences so that
/// subjects are not confounded with classes.
pub fn dataset_params(
    n_sequences: usize,
    n_classes: usize,
    base_seed: u64,
    jitter: &JitterSpec,
) -> Result<Vec<SynthParams>, SynthError> {
    if n_classes > MotionClass::ALL.len() {
        return Err(SynthError::TooManyClasses { requested: n_classes, available: MotionClass::ALL.len() });
    }
    if n_classes == 0 || n_sequences == 0 || jitter.n_subjects == 0 {
        return Err(SynthError::InvalidParams("need at least one sequence, class and subject".into()));
    }
    if jitter.rise.0 < 1 || jitter.lead_in.0 < 1 {
        return Err(SynthError::InvalidParams("rise and lead-in must be at least 1 frame".into()));
    }
    let subject_shift = |s: usize| {
        let mut rng = derive_rng(base_seed, &["subject", &s.to_string()]);
        let m = jitter.max_face_shift;
        (draw_f64(&mut rng, (-m, m)), draw_f64(&mut rng, (-m, m)))
    };
    (0..n_sequences)
        .map(|i| {
            let id = format!("s{i:04}");
            let mut rng = derive_rng(base_seed, &["sequence", &id]);
            let subject = (i / n_classes) % jitter.n_subjects;
            let onset = draw_usize(&mut rng, jitter.lead_in);
            let rise = draw_usize(&mut rng, jitter.rise);
            let ratio = draw_f64(&mut rng, jitter.fall_ratio);
            let fall = ((rise as f64 * ratio).round() as usize).max(1);
            let tail = draw_usize(&mut rng, jitter.tail);
            let params = SynthParams {
                width: jitter.width,
                height: jitter.height,
                n_frames: onset + rise + fall + tail,
                onset,
                apex: onset + rise,
                offset: onset + rise + fall,
                motion_class: MotionClass::ALL[i % n_classes],
                peak_amplitude: draw_f64(&mut rng, jitter.amplitude),
                noise_sigma: jitter.noise_sigma,
                face_shift: subject_shift(subject),
                seed: rng.next_u64(),
                sequence_id: id,
                subject_id: format!("sub{subject:02}"),
            };
            params.validate()?;
            Ok(params)
        })
        .collect()
}

/// Generates a balanced synthetic dataset. Frame directories in the manifest
/// are `frames/<sequence_id>`, matching [`write_dataset`].
pub fn synth_dataset(
    n_sequences: usize,
    n_classes: usize,
    base_seed: u64,
    jitter: &JitterSpec,
) -> Result<SynthDataset, SynthError> {
    use rayon::prelude::*;
    let params = dataset_params(n_sequences, n_classes, base_seed, jitter)?;
    let rendered: Vec<_> = params.par_iter().map(synth_sequence).collect::<Result<_, _>>()?;
    let mut entries = Vec::with_capacity(rendered.len());
    let mut sequences = Vec::with_capacity(rendered.len());
    for (seq, annotation) in rendered {
        let frame_dir = PathBuf::from("frames").join(&annotation.sequence_id);
        entries.push(ManifestEntry { annotation, frame_dir });
        sequences.push(seq);
    }
    let manifest = DatasetManifest::from_entries(entries, "")?;
    Ok(SynthDataset { manifest, sequences, params })
}

/// Writes `frames/<id>/frame_NNNN.png` for every clip and `manifest.csv`
/// under `out_dir`. Returns the manifest path.
pub fn write_dataset(dataset: &SynthDataset, out_dir: &Path) -> Result<PathBuf, SynthError> {
    use rayon::prelude::*;
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| FrameError::Io { path, source }
    };
    dataset.manifest.entries.par_iter().zip(dataset.sequences.par_iter()).try_for_each(|(entry, seq)| {
        let dir = out_dir.join(&entry.frame_dir);
        std::fs::create_dir_all(&dir).map_err(io(&dir))?;
        for (i, frame) in seq.frames().iter().enumerate() {
            ByteImage::from_frame_rounded(frame).save_png(&dir.join(format!("frame_{:04}.png", i + 1)))?;
        }
        Ok::<_, FrameError>(())
    })?;
    let path = out_dir.join("manifest.csv");
    write_manifest(&dataset.manifest, &path)?;
    Ok(path)
}
