use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A matrix that should have orthonormal columns does not.
    #[error("infeasible point: orthonormality error {error:e} exceeds {tolerance:e}")]
    Infeasible { error: f64, tolerance: f64 },

    #[error("matrix is a reflection (det = -1); flip one column before decomposing")]
    Reflection,

    #[error("matrix is not orthogonal: ||U^T U - I||_F = {0:e}")]
    NotOrthogonal(f64),

    #[error("matrix is numerically rank deficient")]
    RankDeficient,

    #[error("objective evaluation failed: {0}")]
    Objective(String),

    #[error("all {0} candidates in the sweep returned non-finite values")]
    AllCandidatesFailed(usize),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
