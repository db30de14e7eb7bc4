use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violates the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// Probabilities do not sum to one within tolerance.
    #[error("normalization error: probabilities sum to {sum}, outside 1 +/- {tolerance}")]
    Normalization { sum: String, tolerance: String },
    /// A finite bit budget or preassigned list cannot supply what was asked for.
    #[error("exhausted: {0}")]
    Exhausted(String),
    /// Malformed textual input.
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn is_exhaustion(&self) -> bool {
        matches!(self, Error::Exhausted(_))
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }

    pub(crate) fn exhausted(msg: impl Into<String>) -> Self {
        Error::Exhausted(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
