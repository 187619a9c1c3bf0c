use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot estimate LM from empty text")]
    EmptyText,

    #[error("cannot estimate background model from an empty token stream")]
    EmptyBackground,

    /// A record in an input file could not be parsed. `line` is 1-based.
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate doc_id `{0}`")]
    DuplicateDocument(String),

    #[error("duplicate user_id `{0}`")]
    DuplicateUser(String),

    #[error("duplicate query_id `{0}`")]
    DuplicateQuery(String),

    #[error("unknown profile field `{0}`")]
    UnknownField(String),

    #[error("unknown document `{0}`")]
    UnknownDocument(String),

    #[error("unknown user `{0}`")]
    UnknownUser(String),

    #[error("unknown query `{0}`")]
    UnknownQuery(String),

    #[error("term `{0}` is not in the document vocabulary")]
    TermNotInDocument(String),

    #[error("zero probability under unsmoothed model (term `{0}`)")]
    ZeroProbability(String),

    #[error("a user model is required when lambda < 1")]
    MissingUserModel,

    #[error("a user profile is required for this query source")]
    MissingProfile,

    #[error("the translation ranker needs an embedding table")]
    MissingEmbeddings,

    #[error("sample size {requested} exceeds pool size {available}")]
    SampleTooLarge { requested: usize, available: usize },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn parse(path: impl Into<PathBuf>, line: usize, message: impl ToString) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.to_string(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
