use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = SlsError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum SlsError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: row {row}: {message}")]
    Parse { path: PathBuf, row: usize, message: String },

    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch { what: &'static str, expected: usize, found: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter {name}: {message}")]
    InvalidParameter { name: &'static str, message: String },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl SlsError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        SlsError::InvalidInput(msg.into())
    }

    pub(crate) fn param(name: &'static str, msg: impl Into<String>) -> Self {
        SlsError::InvalidParameter { name, message: msg.into() }
    }

    pub(crate) fn dims(what: &'static str, expected: usize, found: usize) -> Self {
        SlsError::DimensionMismatch { what, expected, found }
    }

    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(self, SlsError::Singular(_) | SlsError::Numerical(_))
    }
}
