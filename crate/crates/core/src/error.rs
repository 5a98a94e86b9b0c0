use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = MfmError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum MfmError {
    #[error("line {line}: cannot parse {content:?} as a number")]
    Parse { line: usize, content: String },

    #[error("data set contains no observations")]
    EmptyData,

    #[error("need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("all component probabilities vanished for observation {observation}{}",
        .iteration.map(|it| format!(" at iteration {it}")).unwrap_or_default())]
    Numerical {
        observation: usize,
        iteration: Option<usize>,
    },

    #[error("incomplete factorial grid, missing cells: {}", .0.join("; "))]
    IncompleteGrid(Vec<String>),

    #[error("empty trace")]
    EmptyTrace,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl MfmError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        MfmError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        MfmError::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Coarse category, used by the CLI to choose an exit code.
    pub fn category(&self) -> &'static str {
        match self {
            MfmError::Parse { .. }
            | MfmError::EmptyData
            | MfmError::InsufficientData { .. } => "data",
            MfmError::Domain(_) | MfmError::Config(_) | MfmError::IncompleteGrid(_) => "config",
            MfmError::Numerical { .. } => "numerical",
            MfmError::EmptyTrace | MfmError::Format { .. } => "format",
            MfmError::Io { .. } => "io",
        }
    }
}
