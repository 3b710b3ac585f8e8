use std::io;

use thiserror::Error;

/// Errors produced anywhere in the analysis pipeline.
#[derive(Debug, Error)]
pub enum SbcError {
    #[error("index out of bounds: {what} = {index} (limit {limit})")]
    Bounds {
        what: &'static str,
        index: usize,
        limit: usize,
    },

    #[error("sequence shorter than pattern: n = {n}, m = {m}")]
    SequenceTooShort { n: usize, m: usize },

    #[error("unsupported pattern length {0}: must be in 1..=64")]
    UnsupportedPatternLength(usize),

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("pattern length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("format error at byte offset {offset}: {message}")]
    Format { offset: usize, message: String },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<SbcError>,
    },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl SbcError {
    pub(crate) fn validation(message: impl Into<String>) -> Self {
        SbcError::Validation(message.into())
    }

    pub(crate) fn format(offset: usize, message: impl Into<String>) -> Self {
        SbcError::Format {
            offset,
            message: message.into(),
        }
    }
}

pub type Result<T, E = SbcError> = std::result::Result<T, E>;
