use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error in {origin}: {message}")]
    Config { origin: String, message: String },

    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: sflow_core::Error,
    },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("spectral flow methods disagree: {0}")]
    Disagreement(String),

    #[error("{failed} of {total} fixture(s) failed")]
    BatteryFailed { failed: usize, total: usize },
}

impl CliError {
    pub fn config(origin: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            origin: origin.into(),
            message: message.into(),
        }
    }

    pub fn core(context: impl Into<String>, source: sflow_core::Error) -> Self {
        CliError::Core {
            context: context.into(),
            source,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}
