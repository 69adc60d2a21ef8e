/// Errors produced by model construction and evaluation.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A constructor argument violates its documented range.
    #[error("invalid {name} = {value}: must satisfy {requirement}")]
    InvalidArgument {
        name: &'static str,
        value: String,
        requirement: &'static str,
    },

    /// An operation was evaluated outside its mathematical domain.
    #[error("{op}: {detail}")]
    Domain { op: &'static str, detail: String },

    /// An intermediate quantity landed outside its physical range by more
    /// than the numerical dust tolerance, so the result cannot be trusted.
    #[error("{op}: {detail}")]
    Physicality { op: &'static str, detail: String },

    /// A statistical estimate was requested from too little data to resolve
    /// the quantity it is supposed to check.
    #[error("insufficient statistics: {0}")]
    InsufficientStatistics(String),

    /// Writing simulation records to the caller's sink failed.
    #[error("record sink: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    pub(crate) fn invalid<V: std::fmt::Display>(
        name: &'static str,
        value: V,
        requirement: &'static str,
    ) -> Self {
        Error::InvalidArgument {
            name,
            value: value.to_string(),
            requirement,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
