use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("dimension mismatch in {context}: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        context: &'static str,
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("matrix is not diagonalizable (eigenvector condition estimate {condition:.3e})")]
    NotDiagonalizable { condition: f64 },

    #[error("singular Sylvester pencil: eigenvalue sum a[{i}] + b[{j}] = {sum:.3e}")]
    SingularPencil { i: usize, j: usize, sum: f64 },

    #[error("snapshot set is empty or degenerate: {0}")]
    DegenerateSnapshots(String),

    #[error("rank-deficient DEIM basis: {0}")]
    RankDeficient(String),

    #[error("shifted DEIM index {index} out of range for dimension {dim}")]
    ShiftedIndexOutOfRange { index: usize, dim: usize },

    #[error("non-finite state at level {level} along control path {path:?}")]
    NonFiniteState { level: usize, path: Vec<usize> },

    #[error("non-finite state after step {step} at t = {t}")]
    BlowUp { step: usize, t: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("missing target: {0}")]
    MissingTarget(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
