use thiserror::Error;

/// Errors raised by the solvers and the evaluation harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("basis size {size} exceeds the recursion guard ({limit})")]
    RecursionGuardExceeded { size: usize, limit: usize },

    #[error("constraint {0} not found in ordering")]
    NotFound(usize),

    #[error("no candidate constraints to pivot on")]
    EmptyCandidates,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),

    #[error("malformed problem: {0}")]
    MalformedProblem(String),

    #[error("SDP solver failed: {0}")]
    NumericalFailure(String),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPsd(f64),

    #[error("every subproblem of the grid failed")]
    AllSubproblemsFailed,

    #[error("not enough pairs to generate constraints")]
    NotEnoughPairs,

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
