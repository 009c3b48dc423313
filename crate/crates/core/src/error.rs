use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A physical or mathematical precondition failed; `field` names the input.
    #[error("domain error: {field}: {reason}")]
    Domain { field: &'static str, reason: String },

    /// An iterative method failed to converge; carries diagnostics.
    #[error("numerical failure in {context}: {details}")]
    Numerical { context: &'static str, details: String },

    /// Two grid functions were combined but live on different partitions.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn domain(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain { field, reason: reason.into() }
    }

    pub fn numerical(context: &'static str, details: impl Into<String>) -> Self {
        Error::Numerical { context, details: details.into() }
    }
}
