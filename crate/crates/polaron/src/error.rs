use thiserror::Error;

/// Failure modes shared by every module.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Input outside the mathematical domain of the formula.
    #[error("domain error: {0}")]
    Domain(String),
    /// A documented precondition of the operation does not hold.
    #[error("precondition failed: {0}")]
    Precondition(String),
    /// An adaptive procedure stopped before reaching its tolerance.
    #[error("accuracy target missed: {msg} (best estimate {estimate:e}, error bound {error:e})")]
    Accuracy {
        msg: String,
        estimate: f64,
        error: f64,
    },
    /// Supremum search could not locate an interior or boundary maximum.
    #[error("search failed: {0}")]
    Search(String),
    /// Linear algebra or floating point breakdown.
    #[error("numeric failure: {0}")]
    Numeric(String),
    /// Reading or writing an artifact.
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
