use std::cmp::Ordering;
use std::path::{Path, PathBuf};

use super::frame::{to_grayscale, ByteImage, Frame};
use super::manifest::{DatasetManifest, ManifestEntry};
use super::FrameError;

const IMAGE_EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];

/// Ordered frames of one clip. All frames share width, height and channels.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    frames: Vec<Frame>,
    source_dir: PathBuf,
}

impl FrameSequence {
    pub fn new(frames: Vec<Frame>, source_dir: impl Into<PathBuf>) -> Result<Self, FrameError> {
        let first = frames.first().ok_or(FrameError::EmptySequence)?;
        let dims = first.dims();
        if let Some(bad) = frames.iter().find(|f| f.dims() != dims) {
            return Err(FrameError::InconsistentDimensions { expected: dims, found: bad.dims() });
        }
        Ok(Self { frames, source_dir: source_dir.into() })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn source_dir(&self) -> &Path {
        &self.source_dir
    }

    /// Frames `start..=end`, 1-based inclusive.
    pub fn segment(&self, start: usize, end: usize) -> &[Frame] {
        &self.frames[start - 1..end]
    }

    /// `(width, height, channels)` shared by every frame.
    pub fn dims(&self) -> (usize, usize, usize) {
        self.frames[0].dims()
    }
}

#[derive(Debug, PartialEq, Eq)]
enum Chunk<'a> {
    Digits(&'a str),
    Text(&'a str),
}

fn chunks(s: &str) -> Vec<Chunk<'_>> {
    let mut out = Vec::new();
    let bytes = s.as_bytes();
    let mut start = 0;
    while start < bytes.len() {
        let digit = bytes[start].is_ascii_digit();
        let mut end = start + 1;
        while end < bytes.len() && bytes[end].is_ascii_digit() == digit {
            end += 1;
        }
        let part = &s[start..end];
        out.push(if digit { Chunk::Digits(part) } else { Chunk::Text(part) });
        start = end;
    }
    out
}

fn cmp_digits(a: &str, b: &str) -> Ordering {
    let ta = a.trim_start_matches('0');
    let tb = b.trim_start_matches('0');
    ta.len().cmp(&tb.len()).then_with(|| ta.cmp(tb))
}

/// Natural ordering: digit runs compare by numeric value, everything else
/// bytewise. Names equal under that rule fall back to plain string order so
/// the result is total.
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    let (ca, cb) = (chunks(a), chunks(b));
    for (x, y) in ca.iter().zip(&cb) {
        let ord = match (x, y) {
            (Chunk::Digits(p), Chunk::Digits(q)) => cmp_digits(p, q),
            (Chunk::Text(p), Chunk::Text(q)) => p.cmp(q),
            (Chunk::Digits(_), Chunk::Text(_)) => Ordering::Less,
            (Chunk::Text(_), Chunk::Digits(_)) => Ordering::Greater,
        };
        if ord != Ordering::Equal {
            return ord;
        }
    }
    ca.len().cmp(&cb.len()).then_with(|| a.cmp(b))
}

/// Image files (png/jpg/jpeg) in `dir`, naturally sorted by file name.
pub fn list_frame_files(dir: &Path) -> Result<Vec<PathBuf>, FrameError> {
    let read = std::fs::read_dir(dir).map_err(|source| FrameError::Io { path: dir.to_path_buf(), source })?;
    let mut files = Vec::new();
    for entry in read {
        let entry = entry.map_err(|source| FrameError::Io { path: dir.to_path_buf(), source })?;
        let path = entry.path();
        let is_image = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| IMAGE_EXTENSIONS.iter().any(|x| e.eq_ignore_ascii_case(x)));
        if is_image && path.is_file() {
            files.push(path);
        }
    }
    files.sort_by(|a, b| {
        let name = |p: &PathBuf| p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        natural_cmp(&name(a), &name(b))
    });
    Ok(files)
}

/// Loads every frame in `dir`. With `grayscale`, colour frames are reduced
/// to luma.
pub fn load_frames_from_dir(dir: &Path, grayscale: bool) -> Result<FrameSequence, FrameError> {
    let files = list_frame_files(dir)?;
    if files.is_empty() {
        return Err(FrameError::EmptyDirectory(dir.to_path_buf()));
    }
    let mut frames = Vec::with_capacity(files.len());
    for file in &files {
        let mut frame = ByteImage::load(file)?.to_frame();
        if grayscale && frame.channels() == 3 {
            frame = to_grayscale(&frame)?;
        }
        frames.push(frame);
    }
    FrameSequence::new(frames, dir)
}

/// Loads the clip for one manifest entry and checks its annotation against
/// the number of frames found.
pub fn load_sequence(manifest: &DatasetManifest, entry: &ManifestEntry, grayscale: bool) -> Result<FrameSequence, FrameError> {
    let seq = load_frames_from_dir(&manifest.resolve_dir(entry), grayscale)?;
    entry.annotation.validate_against(seq.frame_count())?;
    Ok(seq)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn natural_order_of_numbered_files() {
        let mut names = vec!["img1.jpg", "img10.jpg", "img2.jpg"];
        names.sort_by(|a, b| natural_cmp(a, b));
        assert_eq!(names, vec!["img1.jpg", "img2.jpg", "img10.jpg"]);
    }

    #[test]
    fn natural_order_is_total() {
        assert_eq!(natural_cmp("a01", "a1"), "a01".cmp("a1"));
        assert_ne!(natural_cmp("a01", "a1"), Ordering::Equal);
        assert_eq!(natural_cmp("x", "x"), Ordering::Equal);
        assert_eq!(natural_cmp("f9", "f10"), Ordering::Less);
        assert_eq!(natural_cmp("f99999999999999999999999", "f100000000000000000000000"), Ordering::Less);
    }

    #[test]
    fn sequence_rejects_mixed_dims() {
        let a = Frame::filled(4, 4, 1, 0.0).unwrap();
        let b = Frame::filled(2, 2, 1, 0.0).unwrap();
        assert!(matches!(FrameSequence::new(vec![a, b], "x"), Err(FrameError::InconsistentDimensions { .. })));
        assert!(matches!(FrameSequence::new(vec![], "x"), Err(FrameError::EmptySequence)));
    }
}
