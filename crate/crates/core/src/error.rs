use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("shape {shape:?} does not match {len} data entries")]
    Shape { shape: Vec<usize>, len: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point outside the domain of {system}: {reason}")]
    Domain { system: String, reason: String },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("implicit stage solve failed to converge at step {step} (residual {residual:.3e})")]
    SolverDiverged { step: usize, residual: f64 },

    #[error("malformed model document: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dims(context: &'static str, expected: usize, got: usize) -> Self {
        Error::DimensionMismatch { context, expected, got }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn domain(system: &str, reason: impl Into<String>) -> Self {
        Error::Domain {
            system: system.to_string(),
            reason: reason.into(),
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NonFinite(_) | Error::SolverDiverged { .. })
    }
}
