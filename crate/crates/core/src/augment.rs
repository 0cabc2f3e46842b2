//! Dual-phase dynamic images and spatial augmentation.
//!
//! Every clip yields its full onset-to-offset dynamic image. With dual-phase
//! augmentation enabled it additionally yields an onset-to-apex image (forward
//! weights) and an apex-to-offset image (reversed weights, heaviest on the
//! apex). Phase images and all spatially transformed copies are training-only;
//! evaluation sees just the untransformed full image.

use std::fmt::Write as _;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;

use crate::frameseq::{
    lerp, resize_bilinear, ByteImage, DatasetManifest, ExpressionAnnotation, Frame, FrameError, FrameSequence,
};
use crate::rankpool::{self, arp_weights, normalize_minmax, reversed_arp_weights, DynamicImage, Phase, PoolError};
use crate::seed::derive_rng;

/// Largest rotation magnitude `rotate` accepts, in degrees.
pub const MAX_ROTATION_DEG: f64 = 45.0;
/// Fill level for pixels rotated in from outside the image: mid-gray, the
/// level a zero-motion dynamic image normalizes to.
pub const ROTATION_FILL: f64 = 128.0;
pub const INDEX_HEADER: &str = "file,sequence_id,label,split_role,tags";

#[derive(Debug, thiserror::Error)]
pub enum AugmentError {
    #[error("rotation angle {0} deg is outside +/-{MAX_ROTATION_DEG}")]
    AngleOutOfRange(f64),
    #[error("rotation limit must be positive when rotation is enabled, got {0}")]
    BadRotationLimit(f64),
    #[error("{sequence_id}: {source}")]
    Encode { sequence_id: String, source: PoolError },
    #[error("{0} sequences supplied for a manifest of {1} entries")]
    SequenceCount(usize, usize),
    #[error(transparent)]
    Frame(#[from] FrameError),
}

/// Inclusive onset..=apex and apex..=offset ranges; both contain the apex.
pub fn split_phases(ann: &ExpressionAnnotation) -> (RangeInclusive<usize>, RangeInclusive<usize>) {
    (ann.onset..=ann.apex, ann.apex..=ann.offset)
}

/// Onset-to-apex dynamic image with forward weights, or `None` when the
/// segment is a single frame.
pub fn encode_onset_phase(seq: &FrameSequence, ann: &ExpressionAnnotation) -> Result<Option<DynamicImage>, PoolError> {
    ann.validate_against(seq.frame_count())?;
    let len = ann.apex - ann.onset + 1;
    if len < 2 {
        return Ok(None);
    }
    rankpool::pool_segment(seq, ann, ann.onset, ann.apex, arp_weights(len)?, Phase::Onset).map(Some)
}

/// Apex-to-offset dynamic image with reversed weights, or `None` when the
/// segment is a single frame.
pub fn encode_offset_phase(seq: &FrameSequence, ann: &ExpressionAnnotation) -> Result<Option<DynamicImage>, PoolError> {
    ann.validate_against(seq.frame_count())?;
    let len = ann.offset - ann.apex + 1;
    if len < 2 {
        return Ok(None);
    }
    rankpool::pool_segment(seq, ann, ann.apex, ann.offset, reversed_arp_weights(len)?, Phase::Offset).map(Some)
}

/// Mirrors columns left to right.
pub fn flip_horizontal(img: &Frame) -> Frame {
    let (w, h, c) = img.dims();
    let mut data = Vec::with_capacity(img.data().len());
    for row in img.data().chunks_exact(w * c) {
        for px in row.chunks_exact(c).rev() {
            data.extend_from_slice(px);
        }
    }
    Frame::from_parts_unchecked(w, h, c, data)
}

/// Rotates about the image center by `angle_deg` (positive is
/// counter-clockwise on screen). Output pixels whose source falls outside the
/// input take `fill`; the rest are bilinearly sampled.
pub fn rotate(img: &Frame, angle_deg: f64, fill: f64) -> Result<Frame, AugmentError> {
    if !angle_deg.is_finite() || angle_deg.abs() > MAX_ROTATION_DEG {
        return Err(AugmentError::AngleOutOfRange(angle_deg));
    }
    if angle_deg == 0.0 {
        return Ok(img.clone());
    }
    let (w, h, ch) = img.dims();
    let (sin, cos) = angle_deg.to_radians().sin_cos();
    let cx = (w as f64 - 1.0) / 2.0;
    let cy = (h as f64 - 1.0) / 2.0;
    let (max_x, max_y) = ((w - 1) as f64, (h - 1) as f64);
    let mut data = Vec::with_capacity(w * h * ch);
    for y in 0..h {
        let dy = y as f64 - cy;
        for x in 0..w {
            let dx = x as f64 - cx;
            let sx = cx + dx * cos - dy * sin;
            let sy = cy + dx * sin + dy * cos;
            if !(0.0..=max_x).contains(&sx) || !(0.0..=max_y).contains(&sy) {
                data.extend(std::iter::repeat_n(fill, ch));
                continue;
            }
            let (x0, y0) = (sx.floor() as usize, sy.floor() as usize);
            let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
            let (fx, fy) = (sx - x0 as f64, sy - y0 as f64);
            for c in 0..ch {
                let top = lerp(img.get(x0, y0, c), img.get(x1, y0, c), fx);
                let bottom = lerp(img.get(x0, y1, c), img.get(x1, y1, c), fx);
                data.push(lerp(top, bottom, fy));
            }
        }
    }
    Ok(Frame::from_parts_unchecked(w, h, ch, data))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentConfig {
    pub enable_dual_di: bool,
    pub enable_flip: bool,
    pub enable_rotation: bool,
    /// Rotation angles are drawn uniformly from `[-limit, +limit]` degrees.
    pub rotation_limit: f64,
    pub seed: u64,
    /// Side length every dynamic image is resized to before normalization.
    pub output_size: usize,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            enable_dual_di: false,
            enable_flip: false,
            enable_rotation: false,
            rotation_limit: 10.0,
            seed: 42,
            output_size: 224,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<(), AugmentError> {
        if self.enable_rotation && !(self.rotation_limit > 0.0 && self.rotation_limit <= MAX_ROTATION_DEG) {
            return Err(AugmentError::BadRotationLimit(self.rotation_limit));
        }
        if self.output_size == 0 {
            return Err(FrameError::ZeroDimension.into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SplitRole {
    TrainOnly,
    Eval,
}

impl SplitRole {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitRole::TrainOnly => "train_only",
            SplitRole::Eval => "eval",
        }
    }
}

/// How a sample was derived from its clip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Transform {
    pub phase: Phase,
    pub flipped: bool,
    /// Rotation in hundredths of a degree.
    pub rotation_centideg: Option<i32>,
}

impl Transform {
    pub fn base(phase: Phase) -> Self {
        Self { phase, flipped: false, rotation_centideg: None }
    }

    pub fn is_spatial(&self) -> bool {
        self.flipped || self.rotation_centideg.is_some()
    }

    /// Ordered tags, e.g. `["onset", "flip"]` or `["full", "rot-734"]`.
    pub fn tags(&self) -> Vec<String> {
        let mut tags = vec![self.phase.as_str().to_string()];
        if self.flipped {
            tags.push("flip".into());
        }
        if let Some(r) = self.rotation_centideg {
            tags.push(format!("rot{r}"));
        }
        tags
    }

    /// `<sequence_id>__<phase>[__flip][__rot<centideg>].png`
    pub fn file_name(&self, sequence_id: &str) -> String {
        let mut name = sequence_id.to_string();
        for t in self.tags() {
            let _ = write!(name, "__{t}");
        }
        name.push_str(".png");
        name
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedSample {
    pub image: ByteImage,
    pub origin: String,
    pub label: String,
    pub transform: Transform,
    pub split_role: SplitRole,
}

impl AugmentedSample {
    pub fn file_name(&self) -> String {
        self.transform.file_name(&self.origin)
    }
}

/// A phase image that was not emitted because its segment had one frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedPhase {
    pub sequence_id: String,
    pub phase: Phase,
}

#[derive(Debug, Clone, Default)]
pub struct Expansion {
    pub samples: Vec<AugmentedSample>,
    pub skipped: Vec<SkippedPhase>,
}

/// Resize to `size x size`, then min-max normalize to 8 bits.
pub fn finalize_image(di: &DynamicImage, size: usize) -> Result<ByteImage, FrameError> {
    let resized = resize_bilinear(&di.raw, size, size)?;
    Ok(normalize_minmax(&resized))
}

/// Rotation angle for one sample, quantized to hundredths of a degree. The
/// stream depends only on `(seed, sequence_id, tag)`.
pub fn rotation_angle_centideg(seed: u64, sequence_id: &str, tag: &str, limit_deg: f64) -> i32 {
    let mut rng = derive_rng(seed, &["rotate", sequence_id, tag]);
    let deg: f64 = rng.random_range(-limit_deg..=limit_deg);
    (deg * 100.0).round() as i32
}

/// Samples for one clip in the order described on [`expand_training_set`],
/// plus any phases skipped for having a single frame.
pub fn expand_sequence(
    seq: &FrameSequence,
    ann: &ExpressionAnnotation,
    cfg: &AugmentConfig,
) -> Result<(Vec<AugmentedSample>, Vec<SkippedPhase>), AugmentError> {
    let wrap = |source: PoolError| AugmentError::Encode { sequence_id: ann.sequence_id.clone(), source };
    let mut phases = vec![rankpool::encode_full(seq, ann).map_err(wrap)?];
    let mut skipped = Vec::new();
    if cfg.enable_dual_di {
        for (phase, encoded) in [
            (Phase::Onset, encode_onset_phase(seq, ann).map_err(wrap)?),
            (Phase::Offset, encode_offset_phase(seq, ann).map_err(wrap)?),
        ] {
            match encoded {
                Some(di) => phases.push(di),
                None => {
                    log::warn!("{}: {} segment has a single frame; skipped", ann.sequence_id, phase);
                    skipped.push(SkippedPhase { sequence_id: ann.sequence_id.clone(), phase });
                }
            }
        }
    }

    let mut samples = Vec::new();
    for di in &phases {
        let image = finalize_image(di, cfg.output_size)?;
        let role = if di.phase == Phase::Full { SplitRole::Eval } else { SplitRole::TrainOnly };
        let sample = |image, transform| AugmentedSample {
            image,
            origin: ann.sequence_id.clone(),
            label: ann.label.clone(),
            transform,
            split_role: if transform.is_spatial() { SplitRole::TrainOnly } else { role },
        };
        let base = Transform::base(di.phase);
        let as_frame = image.to_frame();
        samples.push(sample(image, base));
        if cfg.enable_flip {
            let flipped = ByteImage::from_frame_rounded(&flip_horizontal(&as_frame));
            samples.push(sample(flipped, Transform { flipped: true, ..base }));
        }
        if cfg.enable_rotation {
            let centi = rotation_angle_centideg(cfg.seed, &ann.sequence_id, di.phase.as_str(), cfg.rotation_limit);
            let rotated = rotate(&as_frame, f64::from(centi) / 100.0, ROTATION_FILL)?;
            samples.push(sample(
                ByteImage::from_frame_rounded(&rotated),
                Transform { rotation_centideg: Some(centi), ..base },
            ));
        }
    }
    Ok((samples, skipped))
}

/// Expands every clip into its dynamic-image samples.
///
/// Output order follows the manifest, then phase (full, onset, offset), then
/// base / flipped / rotated. Work is spread over the current rayon pool; the
/// result does not depend on the number of threads.
pub fn expand_training_set(
    manifest: &DatasetManifest,
    sequences: &[FrameSequence],
    cfg: &AugmentConfig,
) -> Result<Expansion, AugmentError> {
    cfg.validate()?;
    if sequences.len() != manifest.len() {
        return Err(AugmentError::SequenceCount(sequences.len(), manifest.len()));
    }
    let parts: Vec<_> = manifest
        .entries
        .par_iter()
        .zip(sequences.par_iter())
        .map(|(entry, seq)| expand_sequence(seq, &entry.annotation, cfg))
        .collect::<Result<_, _>>()?;
    let mut out = Expansion::default();
    for (samples, skipped) in parts {
        out.samples.extend(samples);
        out.skipped.extend(skipped);
    }
    Ok(out)
}

/// Writes each sample as a PNG in `dir` plus `index.csv`. Returns the index path.
pub fn write_samples(samples: &[AugmentedSample], dir: &Path) -> Result<PathBuf, FrameError> {
    std::fs::create_dir_all(dir).map_err(|source| FrameError::Io { path: dir.to_path_buf(), source })?;
    samples.par_iter().try_for_each(|s| s.image.save_png(&dir.join(s.file_name())))?;
    let mut index = String::from(INDEX_HEADER);
    index.push('\n');
    for s in samples {
        let _ = writeln!(
            index,
            "{},{},{},{},{}",
            s.file_name(),
            s.origin,
            s.label,
            s.split_role.as_str(),
            s.transform.tags().join("+")
        );
    }
    let path = dir.join("index.csv");
    std::fs::write(&path, index).map_err(|source| FrameError::Io { path: path.clone(), source })?;
    Ok(path)
}
