use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config [{section}]: {reason}")]
    Config {
        section: &'static str,
        reason: String,
    },
    #[error("numerical failure: {0}")]
    Numerical(#[from] gdnls_core::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

pub type HarnessResult<T> = std::result::Result<T, HarnessError>;

impl HarnessError {
    pub(crate) fn config(section: &'static str, reason: impl Into<String>) -> Self {
        HarnessError::Config {
            section,
            reason: reason.into(),
        }
    }

    /// 2 for usage and configuration problems, 3 for numerical failures and
    /// anything else that happens once a run has started.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) | HarnessError::Config { .. } => 2,
            HarnessError::Numerical(gdnls_core::Error::Config { .. })
            | HarnessError::Numerical(gdnls_core::Error::Parameter(_)) => 2,
            HarnessError::Numerical(_) | HarnessError::Io(_) => 3,
        }
    }
}
