use std::path::PathBuf;

use thiserror::Error;

use crate::classify::ClassifyError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("keyword {keyword:?} not found in post {post_id}")]
    KeywordNotFound { post_id: String, keyword: String },

    #[error("unknown topic {0:?}")]
    UnknownTopic(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("model fit failed: {0}")]
    Fit(String),

    #[error(transparent)]
    Client(#[from] ClassifyError),

    /// The cause is part of the message rather than the source chain, so
    /// it prints once.
    #[error("{path}: {cause}")]
    Io { path: PathBuf, cause: std::io::Error },

    #[error("{context}: {message}")]
    Parse { context: String, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            cause: source,
        }
    }

    pub(crate) fn parse(context: impl Into<String>, message: impl ToString) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.to_string(),
        }
    }
}
