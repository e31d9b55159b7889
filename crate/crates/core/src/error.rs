use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("too few agents: n = {n} cannot hold k = {k} opinions")]
    TooFewAgents { n: u64, k: usize },

    #[error("infeasible bias: {0}")]
    InfeasibleBias(String),

    #[error("negative weight {value} at index {index}")]
    NegativeWeight { index: usize, value: f64 },

    #[error("zero-support opinion at index {index}")]
    ZeroSupport { index: usize },

    #[error("instance too large, use Monte Carlo ({outcomes} outcomes)")]
    InstanceTooLarge { outcomes: f64 },

    #[error("tabulation infeasible: {0}")]
    TabulationInfeasible(String),

    #[error("outside the growth-cap regime: {0}")]
    OutsideRegime(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("plan error at `{key}`: {message}")]
    Plan { key: String, message: String },

    #[error("cannot write {path}: {source}")]
    Sink {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn plan(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Plan {
            key: key.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
