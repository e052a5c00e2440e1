use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("oracle returned an infeasible point at iteration {iteration}")]
    InfeasibleOracleOutput { iteration: usize },

    #[error("starting point is infeasible")]
    InfeasibleStart,

    #[error("oracle `{oracle}` does not support problem family `{family}`")]
    UnsupportedProblem { oracle: &'static str, family: &'static str },

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    /// True for errors caused by bad user input (configuration, files),
    /// as opposed to failures during a run.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. }
                | Error::Config(_)
                | Error::Format(_)
                | Error::Json(_)
                | Error::DimensionMismatch { .. }
                | Error::UnsupportedProblem { .. }
        )
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
