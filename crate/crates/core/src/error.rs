use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    ShapeMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("sentence has no tokens")]
    EmptySentence,

    #[error("malformed embedding file (line {line}): {reason}")]
    MalformedEmbeddingFile { line: usize, reason: String },

    #[error("no word of tag {0:?} is in the embedding vocabulary")]
    AllWordsOutOfVocabulary(String),

    #[error(
        "forward cache was produced by parameter version {cache}, model is at version {model}"
    )]
    StaleCache { cache: u64, model: u64 },

    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),

    #[error(
        "record {record} is tagged with every tag of the vocabulary; no negative can be drawn"
    )]
    DegenerateVocabulary { record: usize },

    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("evaluation set is empty")]
    EmptyEvaluationSet,

    #[error("label {0:?} is not a class of the category tree")]
    UnknownLabel(String),

    #[error("malformed record at line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },

    #[error("malformed category tree line {line}: expected \"class: tag, tag, ...\"")]
    MalformedTreeLine { line: usize },

    #[error("duplicate class {0:?} in category tree")]
    DuplicateClass(String),

    #[error("class {class:?} at line {line} has no tags")]
    EmptyTagList { line: usize, class: String },

    #[error("unknown category code {code:?} at line {line}")]
    UnknownCategoryCode { line: usize, code: String },

    #[error("split produced an empty {0} side")]
    DegenerateSplit(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn shape(context: &'static str, expected: usize, actual: usize) -> Self {
        Error::ShapeMismatch {
            context,
            expected,
            actual,
        }
    }
}

pub(crate) fn ensure_len(context: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::shape(context, expected, actual))
    }
}
