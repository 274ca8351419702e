use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the simulation kernels and the study harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("jump measure has no mass on [{delta}, inf)")]
    EmptyTail { delta: f64 },

    #[error("{component} component is inactive (alpha = 0)")]
    InactiveComponent { component: &'static str },

    #[error("degenerate law: {0}")]
    DegenerateLaw(String),

    #[error("offspring law truncation failed: {0}")]
    Truncation(String),

    #[error("invalid offspring law: {0}")]
    InvalidLaw(String),

    #[error("invalid interaction function: {0}")]
    InvalidInteraction(String),

    #[error("event budget of {budget} events exceeded at t = {time}")]
    EventBudget { budget: u64, time: f64 },

    #[error("path has no event log")]
    MissingLog,

    #[error("step size must be positive, got {0}")]
    StepSize(f64),

    #[error("unsupported test function: {0}")]
    UnsupportedTestFunction(String),

    #[error("malformed forest: {0}")]
    MalformedForest(String),

    #[error("interaction derivative bound is required for reweighting")]
    UnboundedDerivative,

    #[error("empty sample")]
    EmptySample,

    #[error("config error at `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
