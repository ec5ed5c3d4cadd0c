//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("cannot decode {path}: {reason}")]
    Decode { path: PathBuf, reason: String },

    #[error("unsupported format for {path}: {reason}")]
    UnsupportedFormat { path: PathBuf, reason: String },

    #[error("dimension mismatch: {context} expected {expected_height}x{expected_width}, got {got_height}x{got_width}")]
    DimensionMismatch {
        context: &'static str,
        expected_height: usize,
        expected_width: usize,
        got_height: usize,
        got_width: usize,
    },

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("invalid mask: {0}")]
    InvalidMask(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("non-finite value at iteration {iteration} in {stage}")]
    NonFinite {
        stage: &'static str,
        iteration: usize,
    },

    #[error("bootstrap iteration {iteration} failed: {source}")]
    BootstrapIteration {
        iteration: u64,
        source: Box<Error>,
    },

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        source: Box<Error>,
    },
}

/// Labels an error with the pipeline stage it came from.
pub fn in_stage(stage: &'static str) -> impl FnOnce(Error) -> Error {
    move |source| Error::Stage {
        stage,
        source: Box::new(source),
    }
}

impl Error {
    /// Dimension-mismatch error from `(height, width)` pairs.
    pub fn dims(
        context: &'static str,
        expected: (usize, usize),
        got: (usize, usize),
    ) -> Self {
        Error::DimensionMismatch {
            context,
            expected_height: expected.0,
            expected_width: expected.1,
            got_height: got.0,
            got_width: got.1,
        }
    }
}
