use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: malformed record: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate document id `{0}`")]
    DuplicateId(String),

    #[error("invalid date `{0}`")]
    InvalidDate(String),

    #[error("query parse error at position {position}: {message}")]
    QueryParse { position: usize, message: String },

    #[error("alignment failed for sentence {sentence}, token {token} (`{surface}`)")]
    Alignment {
        sentence: usize,
        token: usize,
        surface: String,
    },

    #[error("unknown category code {0}")]
    UnknownCode(u32),

    #[error("category code {0} is excluded from assignment")]
    ExcludedCode(u32),

    #[error("invalid polarity `{0}`")]
    InvalidPolarity(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("cosine similarity is undefined for a zero vector")]
    ZeroVector,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("transport error: {0}")]
    Transport(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("training requires both classes; got only label {0}")]
    SingleClass(u8),

    #[error("conflicting categories for {doc_id}#{sentence_index}: {first} vs {second}")]
    CategoryConflict {
        doc_id: String,
        sentence_index: usize,
        first: u32,
        second: u32,
    },

    #[error("length mismatch: {left} predictions vs {right} gold labels")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
