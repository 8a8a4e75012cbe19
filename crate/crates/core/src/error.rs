use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument is outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unknown sender id {0}")]
    UnknownSender(usize),

    #[error("exact enumeration supports at most {max} senders, got {n}; use the Monte Carlo variant")]
    EnumerationTooLarge { n: usize, max: usize },

    #[error("model not identifiable: {0}")]
    Identifiability(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("bootstrap needs at least 2 clusters, got {0}")]
    TooFewClusters(usize),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
