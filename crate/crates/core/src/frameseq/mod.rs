//! Dataset manifests, frame loading and raster primitives.

mod frame;
mod loader;
mod manifest;

use std::path::PathBuf;

pub(crate) use frame::lerp;
pub use frame::{resize_bilinear, to_grayscale, ByteImage, Frame, LUMA_WEIGHTS};
pub use loader::{list_frame_files, load_frames_from_dir, load_sequence, natural_cmp, FrameSequence};
pub use manifest::{
    parse_manifest, parse_manifest_str, write_manifest, DatasetManifest, ExpressionAnnotation, ManifestEntry,
    MANIFEST_HEADER,
};

#[derive(Debug, thiserror::Error)]
pub enum FrameError {
    #[error("manifest header must be `{expected}`, found `{0}`", expected = MANIFEST_HEADER)]
    BadHeader(String),
    #[error("line {line}: expected 7 columns, found {found}")]
    MissingColumn { line: usize, found: usize },
    #[error("line {line}: `{value}` is not a positive integer index")]
    NonIntegerIndex { line: usize, value: String },
    #[error("{sequence_id}: requires onset <= apex <= offset, got {onset}/{apex}/{offset}")]
    OrderingViolation { sequence_id: String, onset: usize, apex: usize, offset: usize },
    #[error("duplicate sequence id `{0}`")]
    DuplicateSequenceId(String),
    #[error("`{0}` is not a valid identifier (allowed: A-Z a-z 0-9 _ -)")]
    InvalidIdentifier(String),
    #[error("{sequence_id}: offset {offset} exceeds frame count {frame_count}")]
    AnnotationOutOfRange { sequence_id: String, offset: usize, frame_count: usize },
    #[error("no image files in {0}")]
    EmptyDirectory(PathBuf),
    #[error("cannot decode {path}: {reason}")]
    UndecodableImage { path: PathBuf, reason: String },
    #[error("frame dimensions differ: expected {expected:?}, found {found:?}")]
    InconsistentDimensions { expected: (usize, usize, usize), found: (usize, usize, usize) },
    #[error("a frame sequence needs at least one frame")]
    EmptySequence,
    #[error("frame is already single-channel")]
    AlreadyGrayscale,
    #[error("width and height must be at least 1")]
    ZeroDimension,
    #[error("unsupported channel count {0} (expected 1 or 3)")]
    UnsupportedChannels(usize),
    #[error("raster data length {actual} does not match expected {expected}")]
    DataLength { expected: usize, actual: usize },
    #[error("raster contains non-finite samples")]
    NonFinite,
    #[error("png encoding failed: {0}")]
    Encode(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}
