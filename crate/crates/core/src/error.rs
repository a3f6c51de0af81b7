//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the recognition pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed PNM data; `offset` is the byte position of the problem.
    #[error("pnm: {msg} at byte {offset}")]
    Pnm { offset: usize, msg: String },

    /// A precondition on an operation's input was violated.
    #[error("{0}")]
    InvalidInput(String),

    /// A character label was not registered with the recognizer.
    #[error("unknown character label `{0}`")]
    UnknownCharacter(String),

    /// A word is missing from the lexicon.
    #[error("word `{0}` not in lexicon")]
    UnknownWord(String),

    /// A model or bundle file did not parse.
    #[error("model file: {0}")]
    ModelFormat(String),

    /// A configuration file did not parse or held an invalid value.
    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
