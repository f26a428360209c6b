//! Crate-wide error type.

use std::fmt;

/// Errors produced by channel construction, closed-form evaluation, Monte
/// Carlo estimation, and the CLI front end.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An input failed validation (non-Hermitian matrix, parameter out of
    /// range, inconsistent dimensions, ...).
    Invalid(String),
    /// The request lies outside the achievable domain, e.g. a rate at or
    /// above the ergodic capacity.
    Domain(String),
    /// A numerical procedure failed to meet its accuracy target. The
    /// diagnostic carries the achieved tolerance or a reciprocal condition
    /// estimate, whichever is relevant.
    Numerical {
        what: String,
        diagnostic: Option<f64>,
    },
    /// A file could not be parsed (matrix files, CLI inputs).
    Parse(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numerical(what: impl Into<String>, diagnostic: Option<f64>) -> Self {
        Error::Numerical {
            what: what.into(),
            diagnostic,
        }
    }

    pub(crate) fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Invalid(msg) => write!(f, "invalid input: {msg}"),
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::Numerical { what, diagnostic } => match diagnostic {
                Some(d) => write!(f, "numerical failure: {what} (diagnostic {d:.3e})"),
                None => write!(f, "numerical failure: {what}"),
            },
            Error::Parse(msg) => write!(f, "parse error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
