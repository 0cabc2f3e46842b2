//! Plain-text model checkpoints.
//!
//! ```text
//! dualdi-classifier 1
//! classes <K>
//! input_side <side>
//! channels <c>
//! labels <name> <name> ...
//! config <free text to end of line>
//! bias <K values>
//! weights <K*D values, row-major>
//! ```
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! save/load cycle reproduces every parameter bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use super::{ClassifierModel, ClfError};
use crate::evalkit::write_atomic;

pub const CHECKPOINT_MAGIC: &str = "dualdi-classifier 1";

fn join(values: &[f64]) -> String {
    let mut s = String::with_capacity(values.len() * 20);
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{v:?}");
    }
    s
}

pub fn save_model(model: &ClassifierModel, path: &Path) -> Result<(), ClfError> {
    model.check()?;
    if model.class_names.iter().any(|n| n.is_empty() || n.contains(char::is_whitespace)) {
        return Err(ClfError::Checkpoint { line: 5, reason: "class names must be non-empty and whitespace-free".into() });
    }
    let text = format!(
        "{CHECKPOINT_MAGIC}\nclasses {}\ninput_side {}\nchannels {}\nlabels {}\nconfig {}\nbias {}\nweights {}\n",
        model.n_classes(),
        model.input_side,
        model.channels,
        model.class_names.join(" "),
        model.config_echo.replace('\n', " "),
        join(&model.bias),
        join(&model.weights),
    );
    write_atomic(path, text.as_bytes()).map_err(|source| ClfError::Io { path: path.to_path_buf(), source })
}

pub fn load_model(path: &Path) -> Result<ClassifierModel, ClfError> {
    let text = std::fs::read_to_string(path).map_err(|source| ClfError::Io { path: path.to_path_buf(), source })?;
    parse_model(&text)
}

pub fn parse_model(text: &str) -> Result<ClassifierModel, ClfError> {
    let mut lines = text.lines();
    let bad = |line: usize, reason: &str| ClfError::Checkpoint { line, reason: reason.to_string() };
    if lines.next() != Some(CHECKPOINT_MAGIC) {
        return Err(bad(1, "unrecognized header"));
    }
    let mut field = |line: usize, key: &str| -> Result<String, ClfError> {
        let l = lines.next().ok_or_else(|| bad(line, "unexpected end of file"))?;
        if l == key {
            return Ok(String::new());
        }
        l.strip_prefix(key)
            .and_then(|rest| rest.strip_prefix(' '))
            .map(str::to_string)
            .ok_or_else(|| bad(line, &format!("expected `{key}`")))
    };
    let int = |line: usize, s: String| s.trim().parse::<usize>().map_err(|_| bad(line, "expected an integer"));
    let floats = |line: usize, s: String| -> Result<Vec<f64>, ClfError> {
        s.split_ascii_whitespace().map(|t| t.parse::<f64>().map_err(|_| bad(line, "expected a number"))).collect()
    };

    let k = int(2, field(2, "classes")?)?;
    let input_side = int(3, field(3, "input_side")?)?;
    let channels = int(4, field(4, "channels")?)?;
    let class_names: Vec<String> = field(5, "labels")?.split_ascii_whitespace().map(str::to_string).collect();
    let config_echo = field(6, "config")?;
    let bias = floats(7, field(7, "bias")?)?;
    let weights = floats(8, field(8, "weights")?)?;

    if class_names.len() != k || bias.len() != k {
        return Err(bad(5, "class count disagrees with labels or bias"));
    }
    let model = ClassifierModel { weights, bias, input_side, channels, class_names, config_echo };
    model.check()?;
    Ok(model)
}
