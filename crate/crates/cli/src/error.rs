use drowsegate_core::Error;
use thiserror::Error as ThisError;

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("{path}: line {line}: {message}")]
    Parse { path: String, line: usize, message: String },

    #[error("{0}")]
    Usage(String),

    #[error("mean frame time {mean_ms:.2} ms exceeds the {budget_ms} ms budget")]
    Budget { mean_ms: f64, budget_ms: f64 },
}

impl CliError {
    /// 2: invalid input or configuration, 3: runtime abort, 4: budget failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Budget { .. } => 4,
            Self::InvalidDataset(_) | Self::Parse { .. } | Self::Usage(_) => 2,
            Self::Core(e) => match e {
                Error::InvalidInput(_)
                | Error::Parse { .. }
                | Error::UnsupportedCascade(_)
                | Error::FaceTooSmall { .. } => 2,
                _ => 3,
            },
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Core(Error::Io(e))
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}
