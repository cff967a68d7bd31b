use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("duplicate snippet id `{0}`")]
    DuplicateSnippet(String),

    #[error("bad file format: {0}")]
    Format(String),

    #[error("unsupported format: {0}")]
    Unsupported(String),

    #[error("concept `{0}` has training examples of only one class")]
    SingleClass(String),

    #[error("class {0} has no training examples")]
    EmptyClass(usize),

    #[error("insufficient examples in cell (class {class}, group {group}): need {needed}, have {available}")]
    InsufficientCell {
        class: String,
        group: String,
        needed: usize,
        available: usize,
    },

    #[error("missing input: {0}")]
    MissingInput(String),

    #[error("empty split")]
    EmptySplit,

    #[error("diversity is undefined for {0} concept(s); need at least 2")]
    DiversityUndefined(usize),

    #[error("prior loss enabled but no prior matrix given")]
    MissingPrior,

    #[error("remote oracle failure: {0}")]
    Remote(String),
}
