use std::fmt;
use std::io;

/// Errors produced by the corpus, training and evaluation pipeline.
#[derive(Debug)]
pub enum Error {
    /// Underlying I/O failure, annotated with what was being done.
    Io { context: String, source: io::Error },
    /// A binary or text artifact did not match its on-disk format.
    Format(String),
    /// Inputs passed validation on shape/range but are inconsistent with
    /// each other (e.g. ids out of range for the accompanying vocabulary).
    Validation(String),
    /// A configuration value (or combination of values) is not allowed.
    Config(String),
    /// A metric is mathematically undefined on the given input
    /// (e.g. rank correlation with zero variance).
    Undefined(String),
    /// Training produced a non-finite value; usually the step size is too large.
    NonFinite(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(context: impl Into<String>, source: io::Error) -> Self {
        Error::Io { context: context.into(), source }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Io { context, source } => write!(f, "io error: {context}: {source}"),
            Error::Format(msg) => write!(f, "format error: {msg}"),
            Error::Validation(msg) => write!(f, "validation error: {msg}"),
            Error::Config(msg) => write!(f, "config error: {msg}"),
            Error::Undefined(msg) => write!(f, "undefined: {msg}"),
            Error::NonFinite(msg) => write!(f, "non-finite value: {msg}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}
