use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A record that makes the whole input unusable.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate doc_id {0:?}")]
    DuplicateDocument(String),

    #[error("unknown doc_id {0:?}")]
    UnknownDocument(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("stance undecidable for topic {0}: no supporting or dissuading documents")]
    StanceUndecidable(u32),

    #[error("missing model {0}")]
    MissingModel(String),

    #[error("pagerank: {0}")]
    PageRank(#[from] crate::credibility::pagerank::PageRankError),

    #[error("unsupported format {found:?} (expected {expected:?})")]
    Format { found: String, expected: String },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
