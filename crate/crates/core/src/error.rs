use thiserror::Error;

/// Errors produced across graph construction, simulation and integration.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("graph generation failed after {attempts} attempts")]
    GenerationFailure { attempts: u64 },

    #[error("internal consistency error: {0}")]
    InternalConsistency(String),

    #[error("numerical failure: {message} (best estimate {best_estimate})")]
    NumericalFailure { message: String, best_estimate: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid config key `{key}`: {message}")]
    InvalidConfig { key: String, message: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("simulation aborted: {0}")]
    SimulationAbort(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
