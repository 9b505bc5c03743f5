use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input line (CoNLL-U, manifest, cache or dump files).
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Structurally invalid sentence or segment.
    #[error("validation error in {context}: {message}")]
    Validation { context: String, message: String },

    /// A background corpus with no sentences was supplied.
    #[error("empty corpus")]
    EmptyCorpus,

    /// A segment with no utterances was requested.
    #[error("empty segment: {0}")]
    EmptySegment(String),

    /// The solver was asked for more work than its configured limits allow.
    #[error("solver error: {0}")]
    Solver(String),

    /// An optimal solution violated the expected tree shape. Indicates a
    /// solver or model bug, not bad input.
    #[error("internal consistency error: {0}")]
    Shape(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn validation(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            context: context.into(),
            message: message.into(),
        }
    }
}
