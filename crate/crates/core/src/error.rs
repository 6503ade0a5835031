use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid decision task: {0}")]
    InvalidTask(String),

    #[error("invalid belief: {0}")]
    InvalidBelief(String),

    #[error("unknown action label `{0}`")]
    UnknownAction(String),

    #[error("unknown state label `{0}`")]
    UnknownState(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("report {0} outside [0, 1]")]
    ReportOutOfRange(f64),

    #[error("kink {0} must lie strictly inside (0, 1)")]
    InvalidKink(f64),

    #[error("{path}:{line}: parse error: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("schema violation in field `{field}`: {message}")]
    Schema { field: String, message: String },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("column `{0}` holds continuous vectors and no coarsening covers it")]
    Uncoarsened(String),

    #[error("empty split: no records to fit")]
    EmptySplit,

    #[error("state spaces differ between joint ({joint}) and task ({task})")]
    StateMismatch { joint: usize, task: usize },

    #[error("policy has no action for signal {0}")]
    MissingPolicy(String),

    #[error("unknown explanation `{0}`")]
    UnknownExplanation(String),

    #[error("human actions missing on {0} record(s)")]
    MissingHumanAction(usize),

    #[error("condition `{0}` has no records")]
    EmptyCondition(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("operation requires binary states, task has {0}")]
    NonBinaryStates(usize),

    #[error("invalid stochastic matrix: {0}")]
    InvalidStochastic(String),

    #[error("temperature must be positive, got {0}")]
    InvalidTemperature(f64),

    #[error("record cannot be assigned: {0}")]
    Unassignable(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn schema(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            field: field.into(),
            message: message.into(),
        }
    }
}
