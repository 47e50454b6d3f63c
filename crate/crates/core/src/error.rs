//! Error type shared by every module of the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input contains no observations")]
    EmptyInput,

    #[error("need at least {needed} observations in dimension {d}, got {got}")]
    TooFewObservations { needed: usize, got: usize, d: usize },

    #[error("non-finite value in row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("row {row} has {got} columns, expected {expected}")]
    RaggedRow { row: usize, got: usize, expected: usize },

    #[error("sample covariance is numerically singular (eigenvalues in [{min_eigenvalue:e}, {max_eigenvalue:e}])")]
    SingularCovariance { min_eigenvalue: f64, max_eigenvalue: f64 },

    #[error("dimension {d} is not supported here (maximum {max})")]
    UnsupportedDimension { d: usize, max: usize },

    #[error("kernel covariance matrix is not positive semidefinite (eigenvalue {min_eigenvalue:e}, largest {max_eigenvalue:e})")]
    KernelNotPsd { min_eigenvalue: f64, max_eigenvalue: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numerical integration failed: {0}")]
    Quadrature(String),

    #[error("cannot parse {what}: {detail}")]
    Parse { what: &'static str, detail: String },

    #[error("checkpoint {path} does not match this run")]
    CheckpointMismatch { path: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
