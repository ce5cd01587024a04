use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid shape {dims:?}: {reason}")]
    InvalidShape { dims: Vec<usize>, reason: String },

    #[error("axis {axis} out of range for rank {rank}")]
    Axis { axis: usize, rank: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("degenerate batch: batch-norm train mode needs at least 2 values per feature, got {count}")]
    DegenerateBatch { count: usize },

    #[error("invalid state: {0}")]
    State(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("label {label} out of range for {classes} classes")]
    Label { label: usize, classes: usize },

    #[error("format error in `{field}`: {detail}")]
    Format { field: String, detail: String },

    #[error("missing frame {index} in {}", dir.display())]
    MissingFrame { dir: PathBuf, index: usize },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("training diverged at epoch {epoch}, batch {batch}: loss = {loss}")]
    Divergence { epoch: usize, batch: usize, loss: f64 },

    #[error("video too short: {frames} frames, need at least {window}")]
    TooShort { frames: usize, window: usize },

    #[error("undefined metric: {0}")]
    Undefined(String),

    #[error("parameter `{name}` conflicts: expected shape {expected:?}, checkpoint has {found:?}")]
    Conflict {
        name: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn format(field: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Format {
            field: field.into(),
            detail: detail.into(),
        }
    }
}
