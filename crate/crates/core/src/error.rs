use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("landmark set is empty")]
    EmptySet,

    #[error("configuration {0:?} is in collision")]
    InCollision(Vec<f64>),

    #[error("configuration {0:?} violates joint limits")]
    OutOfLimits(Vec<f64>),

    #[error("joint index {index} out of range for a {dof}-joint robot")]
    JointIndex { index: usize, dof: usize },

    #[error("value {value} outside interval [{lo}, {hi}]")]
    OutsideInterval { value: f64, lo: f64, hi: f64 },

    #[error("genome has {actual} bits, encoding expects {expected}")]
    GenomeLength { expected: usize, actual: usize },

    #[error("an execution that collided was passed where a legal path is required")]
    CollidedExecution,

    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    #[error("internal consistency violated: {0}")]
    Inconsistent(String),

    #[error("scenario: {0}")]
    Scenario(String),
}

impl Error {
    pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
