use thiserror::Error;

/// Errors raised by a budgeted fitness call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum EvalError {
    /// The evaluation budget has been spent; drivers treat this as a stop condition.
    #[error("evaluation budget exhausted")]
    BudgetExhausted,
    #[error("query point outside the objective bounds")]
    OutOfBounds,
    #[error("query point has dimension {got}, objective expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("plug-in error: {0}")]
    Plugin(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn is_budget_exhausted(&self) -> bool {
        matches!(self, Error::Eval(EvalError::BudgetExhausted))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
