use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degree sequence is not realizable as a simple graph: {0}")]
    NonRealizableSequence(String),

    #[error("degenerate network: {0}")]
    DegenerateNetwork(String),

    #[error("infeasible policy: {0}")]
    InfeasiblePolicy(String),

    #[error("validation failed:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("scenario `{scenario}`: {source}")]
    Scenario {
        scenario: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad input rather than by a failed run.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::InvalidArgument(_)
            | Error::Validation(_)
            | Error::Parse { .. }
            | Error::Json(_)
            | Error::NonRealizableSequence(_) => true,
            Error::Scenario { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}
