use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A numeric argument violated a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Configuration failed schema validation.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// An optimization step produced a non-finite quantity.
    #[error("non-finite value in {context}: {detail}")]
    NonFinite { context: String, detail: String },

    /// State-space size guard tripped during tabular enumeration.
    #[error("state space too large: {0} states")]
    StateSpaceExplosion(usize),

    /// Malformed or missing data file.
    #[error("data error: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
