use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum OttoError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("state is not positive: eigenvalue {0:e}")]
    Positivity(f64),

    #[error("eigensolver did not converge after {0} sweeps")]
    NoConvergence(usize),

    #[error("{stroke} stroke: {detail}")]
    Integration { stroke: String, detail: String },

    #[error("post-selection on a null outcome (p_m = {0:e})")]
    ImpossibleOutcome(f64),
}

impl OttoError {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        OttoError::InvalidArgument(msg.into())
    }

    pub(crate) fn pre(msg: impl Into<String>) -> Self {
        OttoError::Precondition(msg.into())
    }

    pub(crate) fn integration(stroke: impl Into<String>, detail: impl Into<String>) -> Self {
        OttoError::Integration {
            stroke: stroke.into(),
            detail: detail.into(),
        }
    }

    /// Whether the error comes from the numerical/physical layer rather than
    /// from malformed input.
    pub fn is_runtime(&self) -> bool {
        !matches!(self, OttoError::InvalidArgument(_))
    }
}

pub type Result<T> = std::result::Result<T, OttoError>;
