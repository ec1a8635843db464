//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("accumulator kind mismatch: {0} vs {1}")]
    KindMismatch(String, String),

    #[error("accumulator holds no samples")]
    EmptyAccumulator,

    #[error("empirical covariance is singular (min eigenvalue {min_eig:.3e} vs max {max_eig:.3e})")]
    SingularCovariance { min_eig: f64, max_eig: f64 },

    #[error("value does not fit the representable range: {0}")]
    Overflow(String),

    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("sketch fingerprint does not match the operator: {0}")]
    FingerprintMismatch(String),

    #[error("product matrix is singular; the index is undefined")]
    SingularProduct,

    #[error("cluster {cluster} has {points} points, fewer than its subspace dimension {dim}")]
    InsufficientPoints {
        cluster: usize,
        points: usize,
        dim: usize,
    },

    #[error("invalid subspace dimensions: {0}")]
    InvalidDims(String),

    #[error("no success/failure transition found: {0}")]
    NoTransition(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed file: {0}")]
    Format(String),
}
