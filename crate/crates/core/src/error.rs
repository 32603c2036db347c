use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("sentence {sentence}: {message}")]
    InvalidSpan { sentence: usize, message: String },

    #[error("sentence {sentence}: annotator {annotator} has overlapping gold edits {first} and {second}")]
    OverlappingGold {
        sentence: usize,
        annotator: u32,
        first: String,
        second: String,
    },

    #[error("invalid token {0:?}: tokens must be non-empty and contain no whitespace")]
    InvalidToken(String),

    #[error("overlapping edits {0} and {1}")]
    OverlappingEdits(String, String),

    #[error("edit {edit} does not match the source tokens {found:?}")]
    SourceMismatch { edit: String, found: String },

    #[error("no annotations for sentence {0:?}")]
    MissingAnnotation(String),

    #[error("annotation arity mismatch: {tags} tags for {tokens} tokens")]
    AnnotationArity { tags: usize, tokens: usize },

    #[error("feature schema mismatch: expected {expected:?}, found {found:?}")]
    SchemaMismatch { expected: Vec<String>, found: Vec<String> },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
