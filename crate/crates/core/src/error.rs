use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },

    #[error("duplicate record id `{0}`")]
    DuplicateRecord(String),

    #[error("record file contains no records")]
    EmptyCorpus,

    #[error("unknown keyword `{0}`")]
    UnknownKeyword(String),

    #[error("unknown document `{0}`")]
    UnknownDocument(String),

    #[error("node {node} out of range for dimension {dim}")]
    NodeOutOfRange { node: usize, dim: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("citation matrix has no links")]
    EmptyCitationMatrix,

    #[error("spreading activation needs at least one cue")]
    EmptyCues,

    #[error("category has no members")]
    EmptyCategory,

    #[error("interest profile is empty")]
    EmptyProfile,

    #[error("no participating context knows any of {0:?}")]
    UnresolvableProfile(Vec<String>),

    #[error("keyword `{0}` was already resolved")]
    AlreadyResolved(String),

    #[error("keyword `{0}` is not part of the conversation")]
    NotInConversation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
