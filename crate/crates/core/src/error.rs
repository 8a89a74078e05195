use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// The instance does not provide a capability (conjugate, prox, ...).
    #[error("instance lacks {0} support")]
    Unsupported(&'static str),

    #[error("point outside {domain} (violation {violation:.3e})")]
    DomainViolation {
        domain: &'static str,
        violation: f64,
    },

    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("algorithm {algorithm} is incompatible with this instance: {reason}")]
    Incompatible { algorithm: String, reason: String },

    #[error("instance file: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
