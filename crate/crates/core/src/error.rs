use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("duplicate article id {0}")]
    DuplicateArticle(String),

    #[error("article {0} has an empty body")]
    EmptyArticle(String),

    #[error("unknown article id {0}")]
    UnknownArticle(String),

    #[error("n-gram size must be at least 1, got {0}")]
    InvalidGramSize(usize),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("model format version {found} is not supported (expected {expected})")]
    ModelVersion { found: u32, expected: u32 },

    #[error("{0}")]
    Json(#[from] serde_json::Error),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("pair {0} has no entailment label")]
    MissingLabel(String),

    #[error("boost model has no rounds")]
    EmptyModel,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True when the failure comes from the environment (missing file,
    /// unreadable input) rather than from the data itself.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
