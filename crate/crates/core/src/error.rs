use thiserror::Error;

/// Errors raised by the analyses.
///
/// `Domain` covers invalid inputs (bad subsets, malformed states, incoherent
/// devices). `Resource` is raised when an enumeration would exceed its
/// configured cap.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("resource limit exceeded: {what} requires {required} but the cap is {cap}")]
    Resource {
        what: String,
        required: u128,
        cap: u128,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
