use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty state")]
    EmptyState,

    #[error("wavefront reached boundary{}", match .step { Some(t) => format!(" at step {t}"), None => String::new() })]
    BoundaryReached { step: Option<usize> },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("branch does not exist: intensity {intensity} must exceed |theta0/alpha| = {threshold}")]
    BranchDoesNotExist { intensity: f64, threshold: f64 },

    #[error("no localized structure")]
    NoLocalizedStructure,

    #[error("fit did not converge after {iterations} iterations")]
    FitDiverged { iterations: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Attaches the timestep to a boundary violation raised by a single shift.
    pub fn at_step(self, t: usize) -> Self {
        match self {
            Error::BoundaryReached { step: None } => Error::BoundaryReached { step: Some(t) },
            other => other,
        }
    }
}
