use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("{what} {value} out of range {min}..={max}")]
    Range {
        what: &'static str,
        value: usize,
        min: usize,
        max: usize,
    },

    #[error("unknown class: {0}")]
    UnknownClass(String),

    #[error("shape mismatch: expected dimension {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    /// A malformed input file. `line` is 1-based, 0 when the error is not tied to a line.
    #[error("{}:{line}: field `{field}`: {message}", file.display())]
    Load {
        file: PathBuf,
        line: u64,
        field: String,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("trial {trial}: {source}")]
    Trial {
        trial: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("session {session}: {source}")]
    Session {
        session: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn protocol(msg: impl Into<String>) -> Self {
        Error::Protocol(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn load(
        file: impl Into<PathBuf>,
        line: u64,
        field: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        Error::Load {
            file: file.into(),
            line,
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn in_session(self, session: usize) -> Self {
        Error::Session {
            session,
            source: Box::new(self),
        }
    }

    pub(crate) fn in_trial(self, trial: usize) -> Self {
        Error::Trial {
            trial,
            source: Box::new(self),
        }
    }
}
