//! Approximate rank pooling: closed-form temporal weights and the weighted
//! frame sum that turns a clip into a single dynamic image.
//!
//! Forward weights are `2t - T - 1` for `t = 1..=T` and emphasise late frames.
//! Reversed weights are `T + 1 - 2t` and emphasise the first frame of the
//! segment, which for the apex-to-offset phase is the apex itself. Both are
//! integer-valued and sum to zero, so any constant component of the input
//! cancels out of the pooled raster.
//!
//! Each output sample is accumulated with an exactly rounded sum, so the
//! result does not depend on the order in which frames are visited. That
//! makes `rank_pool(reverse(frames), w) == rank_pool(frames, reverse(w))`
//! hold bit for bit.

use std::fmt;

use crate::frameseq::{ByteImage, ExpressionAnnotation, Frame, FrameError, FrameSequence};

#[derive(Debug, thiserror::Error)]
pub enum PoolError {
    #[error("weight vector length must be at least 1")]
    ZeroLength,
    #[error("{frames} frames but {weights} weights")]
    LengthMismatch { frames: usize, weights: usize },
    #[error("no frames to pool")]
    EmptyInput,
    #[error("frames to pool have differing dimensions")]
    DimensionMismatch,
    #[error(transparent)]
    Frame(#[from] FrameError),
}

/// Integer temporal pooling coefficients for a segment of `T` frames.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightVector(Vec<i64>);

impl WeightVector {
    /// Wraps arbitrary weights. Length must be nonzero; the zero-sum property
    /// is not enforced here since callers may want custom schemes.
    pub fn new(values: Vec<i64>) -> Result<Self, PoolError> {
        if values.is_empty() {
            return Err(PoolError::ZeroLength);
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[i64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum(&self) -> i64 {
        self.0.iter().sum()
    }

    pub fn reversed(&self) -> Self {
        Self(self.0.iter().rev().copied().collect())
    }
}

/// Forward weights `2t - T - 1`, `t = 1..=T`.
pub fn arp_weights(len: usize) -> Result<WeightVector, PoolError> {
    if len == 0 {
        return Err(PoolError::ZeroLength);
    }
    let t_len = len as i64;
    Ok(WeightVector((1..=t_len).map(|t| 2 * t - t_len - 1).collect()))
}

/// Reversed weights `T + 1 - 2t`, `t = 1..=T`.
pub fn reversed_arp_weights(len: usize) -> Result<WeightVector, PoolError> {
    if len == 0 {
        return Err(PoolError::ZeroLength);
    }
    let t_len = len as i64;
    Ok(WeightVector((1..=t_len).map(|t| t_len + 1 - 2 * t).collect()))
}

/// Exactly rounded floating-point sum built from non-overlapping partials
/// (Shewchuk's algorithm, as used by Python's `math.fsum`).
#[derive(Default)]
struct ExactSum {
    partials: Vec<f64>,
}

impl ExactSum {
    fn clear(&mut self) {
        self.partials.clear();
    }

    fn add(&mut self, mut x: f64) {
        let mut i = 0;
        for j in 0..self.partials.len() {
            let mut y = self.partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                self.partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        self.partials.truncate(i);
        self.partials.push(x);
    }

    fn value(&self) -> f64 {
        let p = &self.partials;
        let mut n = p.len();
        if n == 0 {
            return 0.0;
        }
        n -= 1;
        let mut hi = p[n];
        let mut lo = 0.0;
        while n > 0 {
            let x = hi;
            n -= 1;
            let y = p[n];
            hi = x + y;
            lo = y - (hi - x);
            if lo != 0.0 {
                break;
            }
        }
        // Round-half-even correction when the remaining partials push the
        // tail past the halfway point.
        if n > 0 && ((lo < 0.0 && p[n - 1] < 0.0) || (lo > 0.0 && p[n - 1] > 0.0)) {
            let y = lo * 2.0;
            let x = hi + y;
            if y == x - hi {
                hi = x;
            }
        }
        hi
    }
}

/// Weighted temporal sum `sum_t w[t] * frames[t]`, per sample and channel.
pub fn rank_pool(frames: &[Frame], weights: &WeightVector) -> Result<Frame, PoolError> {
    if frames.is_empty() {
        return Err(PoolError::EmptyInput);
    }
    if frames.len() != weights.len() {
        return Err(PoolError::LengthMismatch { frames: frames.len(), weights: weights.len() });
    }
    let dims = frames[0].dims();
    if frames.iter().any(|f| f.dims() != dims) {
        return Err(PoolError::DimensionMismatch);
    }
    let (w, h, c) = dims;
    let n = w * h * c;
    let coeffs: Vec<f64> = weights.values().iter().map(|&v| v as f64).collect();
    let mut acc = ExactSum::default();
    let mut out = Vec::with_capacity(n);
    for p in 0..n {
        acc.clear();
        for (frame, &a) in frames.iter().zip(&coeffs) {
            if a != 0.0 {
                acc.add(a * frame.data()[p]);
            }
        }
        out.push(acc.value());
    }
    Ok(Frame::new(w, h, c, out)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phase {
    Full,
    Onset,
    Offset,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Full => "full",
            Phase::Onset => "onset",
            Phase::Offset => "offset",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Pooled raster of one clip segment, with its phase and provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicImage {
    pub raw: Frame,
    pub phase: Phase,
    pub sequence_id: String,
    pub label: String,
}

/// Min-max maps a raw raster onto `0..=255` using a single range over all
/// channels. A constant raster maps to mid-gray 128.
pub fn normalize_minmax(raw: &Frame) -> ByteImage {
    let (lo, hi) = raw.min_max();
    let scaled = if hi > lo {
        let span = hi - lo;
        raw.map(|v| 255.0 * ((v - lo) / span))
    } else {
        raw.map(|_| 128.0)
    };
    ByteImage::from_frame_rounded(&scaled)
}

pub(crate) fn pool_segment(
    seq: &FrameSequence,
    ann: &ExpressionAnnotation,
    start: usize,
    end: usize,
    weights: WeightVector,
    phase: Phase,
) -> Result<DynamicImage, PoolError> {
    let raw = rank_pool(seq.segment(start, end), &weights)?;
    Ok(DynamicImage { raw, phase, sequence_id: ann.sequence_id.clone(), label: ann.label.clone() })
}

/// Dynamic image of the whole onset..=offset segment with forward weights.
pub fn encode_full(seq: &FrameSequence, ann: &ExpressionAnnotation) -> Result<DynamicImage, PoolError> {
    ann.validate_against(seq.frame_count())?;
    pool_segment(seq, ann, ann.onset, ann.offset, arp_weights(ann.full_len())?, Phase::Full)
}
