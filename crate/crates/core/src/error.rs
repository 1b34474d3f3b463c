use thiserror::Error;

/// Errors raised by the solver and its building blocks.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("singular pencil: {0}")]
    SingularPencil(String),

    #[error("improper pair: both subdiagonal entries vanish at pole index {index}")]
    ImproperPair { index: usize },

    #[error("singular 2x2 block while swapping poles at position {position}")]
    SingularBlock { position: usize },

    #[error("no convergence in window [{lo}, {hi}] after {iterations} iterations")]
    NoConvergence { lo: usize, hi: usize, iterations: usize },

    #[error("rational Krylov breakdown at dimension {dim}: invariant subspace found")]
    Breakdown { dim: usize },

    #[error("pole coincides with an eigenvalue: shifted solve is singular")]
    PoleHitsEigenvalue,

    #[error("rank deficient input: {0}")]
    RankDeficient(String),

    #[error("restart limit of {0} exceeded")]
    MaxRestarts(usize),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("matrix of size {rows}x{cols} exceeds the dense cap {cap}")]
    TooLarge { rows: usize, cols: usize, cap: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
