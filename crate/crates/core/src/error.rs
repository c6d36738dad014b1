use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("empty input: no edges found")]
    EmptyInput,

    #[error("vertex {0} is isolated (degree 0)")]
    IsolatedVertex(usize),

    #[error("graph is disconnected; restrict to the largest component first")]
    Disconnected,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("index {index} out of range for size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate simplex (det Q = {det:e})")]
    DegenerateSimplex { det: f64 },

    #[error("point cloud is rank deficient (rank {rank} < {k}); try a smaller k")]
    RankDeficient { rank: usize, k: usize },

    #[error("matrix is not positive definite on the complement of the ones vector")]
    NotPositiveDefinite,

    #[error("solver did not converge: {0}")]
    NoConvergence(String),

    #[error("problem too large: {0}")]
    TooLarge(String),
}

pub type Result<T> = std::result::Result<T, Error>;
