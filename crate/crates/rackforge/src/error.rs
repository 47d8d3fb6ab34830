//! Crate-wide error type and result alias.

use std::path::PathBuf;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A shelf frame was requested for an empty visible set.
    #[error("no visible rack to anchor the shelf frame")]
    NoVisibleRack,

    /// A configuration value violates its invariants.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// Scene synthesis could not satisfy the requested constraints.
    #[error("generation infeasible: {0}")]
    GenerationInfeasible(String),

    /// Split ratios do not add up to the sequence count (or to 1.0).
    #[error("invalid split: {0}")]
    InvalidSplit(String),

    /// Mismatched stack shapes fed to a loss kernel or metric.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A loss kernel received an empty batch.
    #[error("empty batch passed to {0}")]
    EmptyBatch(&'static str),

    /// Consistency losses need a minimum sequence length.
    #[error("sequence too short: need at least {need} frames, got {got}")]
    SequenceTooShort { need: usize, got: usize },

    /// No ground-truth support anywhere, so the metric has no value.
    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    /// Frame-to-frame matching found no usable correspondence.
    #[error("no overlap between frame {prev} and frame {next}")]
    NoOverlap { prev: usize, next: usize },

    /// Malformed binary file; `offset` points at the offending byte.
    #[error("format error in {path:?} at offset {offset}: {message}")]
    Format {
        path: PathBuf,
        offset: u64,
        message: String,
    },

    /// A schema-level violation, named after the offending field.
    #[error("validation error in field `{field}`: {message}")]
    Validation { field: String, message: String },

    /// Prediction and truth datasets do not line up.
    #[error("alignment error: {0}")]
    Alignment(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, offset: u64, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            offset,
            message: message.into(),
        }
    }
}
