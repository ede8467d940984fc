use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid score scale: {0}")]
    InvalidScale(String),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("invalid evaluation set: {0}")]
    InvalidEvaluations(String),

    #[error("score {score} of object {object} by judge {judge} is {reason}")]
    InvalidScore {
        judge: String,
        object: String,
        score: String,
        reason: &'static str,
    },

    #[error("weights must be non-negative and not both zero")]
    InvalidWeights,

    #[error("instance too large for exhaustive search: {0}")]
    TooLarge(String),

    #[error("judge {0} has a zero mean score")]
    ZeroMean(String),

    #[error("solver self-check failed: reported {reported}, re-evaluated {evaluated}")]
    SelfCheck { reported: String, evaluated: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
