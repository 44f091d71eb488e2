use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("infeasible model: {0}")]
    Infeasible(String),
    #[error("verification failed: {0}")]
    Mismatch(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Mismatch(_) => 1,
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Infeasible(_) => 4,
        }
    }
}

impl From<cphmm::Error> for CliError {
    fn from(e: cphmm::Error) -> Self {
        use cphmm::Error::*;
        let msg = e.to_string();
        match e {
            InvalidObservation { .. } | DegenerateSegment { .. } => CliError::Data(msg),
            InfeasibleEvidence(_) | UndefinedPosterior | NoPath => CliError::Infeasible(msg),
            InvalidParameter(_) | DimensionMismatch(_) | BudgetExceeded { .. } => {
                CliError::Config(msg)
            }
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(format!("cannot write output: {e}"))
    }
}
