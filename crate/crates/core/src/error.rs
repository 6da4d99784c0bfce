use thiserror::Error;

/// Errors raised by the algebra kernel, the solvers and the file front ends.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("operands belong to different cones")]
    ConeMismatch,

    #[error("invalid cone: {0}")]
    InvalidCone(String),

    #[error("length mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A spectral function was evaluated outside its domain.
    #[error("{op} undefined at eigenvalue {eigenvalue:e}")]
    Domain { op: &'static str, eigenvalue: f64 },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// Orthonormalization lost rank: vector `index` kept only `ratio` of its norm.
    #[error("ill-conditioned basis: vector {index} retains {ratio:e} of its norm")]
    IllConditionedBasis { index: usize, ratio: f64 },

    #[error("singular saddle-point system (degenerate constraints)")]
    DegenerateConstraints,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Parse(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
