use alloc::string::String;

/// Errors produced by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid walk configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index {index} out of range (len {len})")]
    OutOfRange { index: usize, len: usize },

    #[error("connection probability {value} at ({row}, {col}) lies outside [0, 1]")]
    ProbabilityOutOfRange { row: usize, col: usize, value: f64 },

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    EigenNonConvergence { iterations: usize, residual: f64 },

    #[error("linear program failed at knot {knot}: {reason}")]
    LinearProgram { knot: usize, reason: &'static str },
}

pub type Result<T> = core::result::Result<T, Error>;
