use thiserror::Error;

use crate::metrics::MetricsTrace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("unsupported graph: {0}")]
    UnsupportedGraph(String),

    #[error("mixing matrix is not primitive (spectral gap {lambda} >= 1)")]
    NonPrimitive { lambda: f64 },

    #[error("mixing matrix is not doubly stochastic: {0}")]
    NotDoublyStochastic(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("empty minibatch")]
    EmptyBatch,

    #[error("run diverged at round {round}")]
    Diverged {
        round: usize,
        trace: Box<MetricsTrace>,
    },

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
