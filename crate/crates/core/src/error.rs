use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {field}: {reason}")]
    Config { field: &'static str, reason: String },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("non-finite values produced in {0}")]
    Overflow(String),

    #[error("singular mode: {0}")]
    SingularMode(String),

    #[error("grid mismatch: {0}")]
    Shape(String),

    #[error("boundary amplitude {amplitude:.3e} exceeds guard {limit:.3e}")]
    Truncation { amplitude: f64, limit: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("step {step} (t = {time}) failed: {reason}")]
    StepFailure {
        step: usize,
        time: f64,
        reason: String,
    },

    #[error("iteration diverged after {iterations} iterations (last distance {last_distance:.3e}); try a smaller T")]
    Divergence {
        iterations: usize,
        last_distance: f64,
    },
}

impl Error {
    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Config {
            field,
            reason: reason.into(),
        }
    }
}
