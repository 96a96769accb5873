use std::path::Path;

use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;
pub const EXIT_ASSERTION: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config at `{path}`: {reason}")]
    Invalid { path: String, reason: String },
    #[error("{runs} run(s) diverged")]
    Diverged { runs: usize },
    #[error("assertion failed: {0}")]
    Assertion(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] gtnsgdm_core::Error),
}

impl CliError {
    pub fn invalid(path: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Invalid {
            path: path.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Invalid { .. } => EXIT_CONFIG,
            CliError::Diverged { .. } => EXIT_DIVERGED,
            CliError::Assertion(_) => EXIT_ASSERTION,
            CliError::Io { .. } => EXIT_FAILURE,
            CliError::Core(e) => match e {
                gtnsgdm_core::Error::Diverged { .. } => EXIT_DIVERGED,
                gtnsgdm_core::Error::Io(_) => EXIT_FAILURE,
                _ => EXIT_CONFIG,
            },
        }
    }
}
