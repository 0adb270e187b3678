use alloc::string::String;

use crate::conic::SolveStatus;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),

    #[error("matrix is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("operator is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),

    #[error("trace is not 1 (got {0})")]
    InvalidTrace(f64),

    #[error("state vector is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("invalid block structure: {0}")]
    InvalidBlocks(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed conic problem: {0}")]
    MalformedProblem(String),

    #[error("conic solver did not reach optimality (status {0:?})")]
    Solver(SolveStatus),

    #[error("operation not supported for this resource theory: {0}")]
    UnsupportedTheory(String),

    #[error("target state is free (R_min = {0}); distillation target must be resourceful")]
    DegenerateTarget(f64),

    #[error("precondition violated: {0}")]
    Precondition(String),
}

pub type Result<T> = core::result::Result<T, Error>;
