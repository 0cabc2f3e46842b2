//! Floating-point and 8-bit rasters plus the two pixel primitives the
//! pipeline needs: luma conversion and bilinear resampling.

use std::path::Path;

use image::{ColorType, ImageEncoder};

use super::FrameError;

/// ITU-R 601 luma weights.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// A row-major, channel-interleaved raster of `f64` samples.
///
/// Frames decoded from disk hold samples in `[0, 255]`. Dynamic images reuse
/// the same type for their raw (signed, unbounded) output, so the only
/// sample-level invariant enforced here is finiteness.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Frame {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Result<Self, FrameError> {
        if width == 0 || height == 0 {
            return Err(FrameError::ZeroDimension);
        }
        if channels != 1 && channels != 3 {
            return Err(FrameError::UnsupportedChannels(channels));
        }
        let expected = width * height * channels;
        if data.len() != expected {
            return Err(FrameError::DataLength { expected, actual: data.len() });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(FrameError::NonFinite);
        }
        Ok(Self { width, height, channels, data })
    }

    /// A frame with every sample set to `value`.
    pub fn filled(width: usize, height: usize, channels: usize, value: f64) -> Result<Self, FrameError> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    /// Builds a frame by evaluating `f(x, y, c)` at every sample.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self, FrameError> {
        let mut data = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(x, y, c));
                }
            }
        }
        Self::new(width, height, channels, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// `(width, height, channels)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.channels)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f64 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Element-wise map. The caller must keep samples finite.
    pub(crate) fn map(&self, f: impl Fn(f64) -> f64) -> Frame {
        Frame {
            width: self.width,
            height: self.height,
            channels: self.channels,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub(crate) fn from_parts_unchecked(width: usize, height: usize, channels: usize, data: Vec<f64>) -> Frame {
        debug_assert_eq!(data.len(), width * height * channels);
        Frame { width, height, channels, data }
    }
}

/// Converts a 3-channel frame to single-channel luma.
pub fn to_grayscale(frame: &Frame) -> Result<Frame, FrameError> {
    if frame.channels != 3 {
        return Err(FrameError::AlreadyGrayscale);
    }
    let data = frame
        .data
        .chunks_exact(3)
        .map(|px| LUMA_WEIGHTS[0] * px[0] + LUMA_WEIGHTS[1] * px[1] + LUMA_WEIGHTS[2] * px[2])
        .collect();
    Ok(Frame::from_parts_unchecked(frame.width, frame.height, 1, data))
}

/// Exact at `t = 0` and for `a == b`.
#[inline]
pub(crate) fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

/// Source coordinate and blend factor for one output index.
///
/// Pixel centers are aligned: `src = (dst + 0.5) * scale - 0.5`, clamped to
/// the valid range.
fn sample_axis(dst: usize, scale: f64, len: usize) -> (usize, usize, f64) {
    let src = ((dst as f64 + 0.5) * scale - 0.5).clamp(0.0, (len - 1) as f64);
    let i0 = src.floor() as usize;
    let i1 = (i0 + 1).min(len - 1);
    (i0, i1, src - i0 as f64)
}

/// Bilinear resampling with pixel-center alignment and border clamping.
pub fn resize_bilinear(frame: &Frame, out_w: usize, out_h: usize) -> Result<Frame, FrameError> {
    if out_w == 0 || out_h == 0 {
        return Err(FrameError::ZeroDimension);
    }
    let (w, h, ch) = frame.dims();
    let sx = w as f64 / out_w as f64;
    let sy = h as f64 / out_h as f64;
    let cols: Vec<_> = (0..out_w).map(|x| sample_axis(x, sx, w)).collect();
    let mut data = Vec::with_capacity(out_w * out_h * ch);
    for y in 0..out_h {
        let (y0, y1, fy) = sample_axis(y, sy, h);
        for &(x0, x1, fx) in &cols {
            for c in 0..ch {
                let top = lerp(frame.get(x0, y0, c), frame.get(x1, y0, c), fx);
                let bottom = lerp(frame.get(x0, y1, c), frame.get(x1, y1, c), fx);
                data.push(lerp(top, bottom, fy));
            }
        }
    }
    Ok(Frame::from_parts_unchecked(out_w, out_h, ch, data))
}

/// An 8-bit raster, the on-disk form of frames and normalized dynamic images.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ByteImage {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<u8>,
}

impl ByteImage {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self, FrameError> {
        if width == 0 || height == 0 {
            return Err(FrameError::ZeroDimension);
        }
        if channels != 1 && channels != 3 {
            return Err(FrameError::UnsupportedChannels(channels));
        }
        let expected = width * height * channels;
        if data.len() != expected {
            return Err(FrameError::DataLength { expected, actual: data.len() });
        }
        Ok(Self { width, height, channels, data })
    }

    /// Quantizes a frame: round half away from zero, then clamp to `[0, 255]`.
    pub fn from_frame_rounded(frame: &Frame) -> Self {
        let data = frame.data.iter().map(|&v| v.round().clamp(0.0, 255.0) as u8).collect();
        Self { width: frame.width, height: frame.height, channels: frame.channels, data }
    }

    pub fn to_frame(&self) -> Frame {
        Frame::from_parts_unchecked(
            self.width,
            self.height,
            self.channels,
            self.data.iter().map(|&v| f64::from(v)).collect(),
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    /// Encodes as PNG into memory.
    pub fn encode_png(&self) -> Result<Vec<u8>, FrameError> {
        let color = if self.channels == 1 { ColorType::L8 } else { ColorType::Rgb8 };
        let mut out = Vec::new();
        image::codecs::png::PngEncoder::new(&mut out)
            .write_image(&self.data, self.width as u32, self.height as u32, color.into())
            .map_err(|e| FrameError::Encode(e.to_string()))?;
        Ok(out)
    }

    pub fn save_png(&self, path: &Path) -> Result<(), FrameError> {
        let bytes = self.encode_png()?;
        std::fs::write(path, bytes).map_err(|source| FrameError::Io { path: path.to_path_buf(), source })
    }

    /// Decodes a PNG or JPEG. Alpha is dropped; 16-bit input is reduced to 8 bits.
    pub fn load(path: &Path) -> Result<Self, FrameError> {
        let img = image::open(path).map_err(|e| FrameError::UndecodableImage {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        let (w, h) = (img.width() as usize, img.height() as usize);
        let img = if img.color().has_color() {
            Self { width: w, height: h, channels: 3, data: img.into_rgb8().into_raw() }
        } else {
            Self { width: w, height: h, channels: 1, data: img.into_luma8().into_raw() }
        };
        Ok(img)
    }
}
