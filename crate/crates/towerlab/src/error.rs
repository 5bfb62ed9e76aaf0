use thiserror::Error;

/// Crate-wide error type. Violations of verification contracts are *not*
/// errors; verifiers return structured reports instead. Errors are reserved
/// for invalid inputs, unsupported combinations and resource exhaustion.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("resource exhausted: {0}")]
    ResourceExhausted(String),

    #[error("invariance violation: defect {defect} is not below {threshold}")]
    InvarianceViolation { defect: crate::rat::Rat, threshold: crate::rat::Rat },

    #[error("return-time cap {cap} exceeded; raise the cap or enlarge the base")]
    CapExceeded { cap: u64 },

    #[error("algorithm incomplete: {0}")]
    AlgorithmIncomplete(String),

    #[error("insufficient margins: {0}")]
    InsufficientMargins(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn unsupported(msg: impl Into<String>) -> Self {
        Error::Unsupported(msg.into())
    }
}
