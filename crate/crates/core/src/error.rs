use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid observation at position {position}: {reason}")]
    InvalidObservation { position: usize, reason: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("infeasible evidence: {0}")]
    InfeasibleEvidence(String),

    #[error("posterior undefined: the evidence has probability zero")]
    UndefinedPosterior,

    #[error("no path is consistent with the evidence")]
    NoPath,

    #[error("degenerate segment {segment}: {reason}")]
    DegenerateSegment { segment: usize, reason: String },

    #[error("enumeration needs {required} sequences, budget is {cap}")]
    BudgetExceeded { required: u128, cap: u128 },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }
}
