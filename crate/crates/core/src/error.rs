use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("interface error: {0}")]
    Interface(String),

    #[error("contract violation: {0}")]
    Contract(String),

    /// A linear solve failed or its residual check was breached.
    #[error("solver failure at {frequency_hz:.4} Hz: {reason}")]
    Solver { frequency_hz: f64, reason: String },

    #[error(
        "expansion point {frequency_hz:.4} Hz is unusable ({reason}); move the point off the resonance"
    )]
    ExpansionPoint { frequency_hz: f64, reason: String },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.into(),
        }
    }

    /// True for failures that stem from numerics rather than from inputs or I/O.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Solver { .. } | Error::ExpansionPoint { .. } | Error::DegenerateInput(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
