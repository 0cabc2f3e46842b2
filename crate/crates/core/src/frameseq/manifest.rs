use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::FrameError;

pub const MANIFEST_HEADER: &str = "sequence_id,subject_id,frame_dir,onset,apex,offset,label";

/// Onset/apex/offset annotation for one clip. Indices are 1-based positions
/// into the naturally sorted frame list of the clip's directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpressionAnnotation {
    pub sequence_id: String,
    pub subject_id: String,
    pub onset: usize,
    pub apex: usize,
    pub offset: usize,
    pub label: String,
}

impl ExpressionAnnotation {
    /// Checks `1 <= onset <= apex <= offset`.
    pub fn validate(&self) -> Result<(), FrameError> {
        if self.onset == 0 || !(self.onset <= self.apex && self.apex <= self.offset) {
            return Err(FrameError::OrderingViolation {
                sequence_id: self.sequence_id.clone(),
                onset: self.onset,
                apex: self.apex,
                offset: self.offset,
            });
        }
        Ok(())
    }

    /// Checks ordering and that `offset` fits inside a clip of `frame_count` frames.
    pub fn validate_against(&self, frame_count: usize) -> Result<(), FrameError> {
        self.validate()?;
        if self.offset > frame_count {
            return Err(FrameError::AnnotationOutOfRange {
                sequence_id: self.sequence_id.clone(),
                offset: self.offset,
                frame_count,
            });
        }
        Ok(())
    }

    /// Number of frames in the inclusive onset..=offset segment.
    pub fn full_len(&self) -> usize {
        self.offset - self.onset + 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub annotation: ExpressionAnnotation,
    /// Frame directory as written in the manifest; relative paths are
    /// resolved against the manifest's own directory.
    pub frame_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    pub label_vocabulary: Vec<String>,
    pub base_dir: PathBuf,
}

fn valid_identifier(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
}

impl DatasetManifest {
    /// Builds a manifest from entries, validating ids, labels and ordering and
    /// deriving the sorted label vocabulary.
    pub fn from_entries(entries: Vec<ManifestEntry>, base_dir: impl Into<PathBuf>) -> Result<Self, FrameError> {
        let mut seen = HashSet::new();
        let mut labels = BTreeSet::new();
        for e in &entries {
            let a = &e.annotation;
            for field in [&a.sequence_id, &a.subject_id, &a.label] {
                if !valid_identifier(field) {
                    return Err(FrameError::InvalidIdentifier(field.clone()));
                }
            }
            a.validate()?;
            if !seen.insert(a.sequence_id.as_str()) {
                return Err(FrameError::DuplicateSequenceId(a.sequence_id.clone()));
            }
            labels.insert(a.label.clone());
        }
        Ok(Self { entries, label_vocabulary: labels.into_iter().collect(), base_dir: base_dir.into() })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Index of `label` in the vocabulary.
    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.label_vocabulary.binary_search_by(|l| l.as_str().cmp(label)).ok()
    }

    pub fn resolve_dir(&self, entry: &ManifestEntry) -> PathBuf {
        self.base_dir.join(&entry.frame_dir)
    }

    /// Serializes to the CSV form accepted by [`parse_manifest_str`].
    pub fn to_csv(&self) -> String {
        let mut out = String::from(MANIFEST_HEADER);
        out.push('\n');
        for e in &self.entries {
            let a = &e.annotation;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                a.sequence_id,
                a.subject_id,
                e.frame_dir.display(),
                a.onset,
                a.apex,
                a.offset,
                a.label
            );
        }
        out
    }
}

/// Reads and validates a manifest file. Relative frame directories resolve
/// against the file's parent directory.
pub fn parse_manifest(path: &Path) -> Result<DatasetManifest, FrameError> {
    let text = std::fs::read_to_string(path).map_err(|source| FrameError::Io { path: path.to_path_buf(), source })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_manifest_str(&text, base)
}

pub fn parse_manifest_str(text: &str, base_dir: impl Into<PathBuf>) -> Result<DatasetManifest, FrameError> {
    let mut lines = text.lines().map(|l| l.strip_suffix('\r').unwrap_or(l));
    match lines.next() {
        Some(h) if h == MANIFEST_HEADER => {}
        other => return Err(FrameError::BadHeader(other.unwrap_or_default().to_string())),
    }
    let mut entries = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(FrameError::MissingColumn { line: line_no, found: fields.len() });
        }
        let index = |s: &str| -> Result<usize, FrameError> {
            match s.trim().parse::<usize>() {
                Ok(v) if v > 0 => Ok(v),
                _ => Err(FrameError::NonIntegerIndex { line: line_no, value: s.to_string() }),
            }
        };
        entries.push(ManifestEntry {
            annotation: ExpressionAnnotation {
                sequence_id: fields[0].to_string(),
                subject_id: fields[1].to_string(),
                onset: index(fields[3])?,
                apex: index(fields[4])?,
                offset: index(fields[5])?,
                label: fields[6].to_string(),
            },
            frame_dir: PathBuf::from(fields[2]),
        });
    }
    DatasetManifest::from_entries(entries, base_dir)
}

/// Writes the manifest CSV to `path`.
pub fn write_manifest(manifest: &DatasetManifest, path: &Path) -> Result<(), FrameError> {
    std::fs::write(path, manifest.to_csv()).map_err(|source| FrameError::Io { path: path.to_path_buf(), source })
}
