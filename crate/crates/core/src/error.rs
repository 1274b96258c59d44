use thiserror::Error;

/// Errors produced by the drowsegate library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unsupported cascade: {0}")]
    UnsupportedCascade(String),

    #[error("face rectangle {width}x{height} is smaller than the 40x40 minimum")]
    FaceTooSmall { width: usize, height: usize },

    #[error("no gradient samples exceed the participation threshold")]
    NoGradients,

    #[error("every objective maximum touches the region border")]
    NoInteriorMaximum,

    #[error("image carries no structure to classify")]
    Unclassifiable,

    #[error("frame {got} arrived after frame {last}")]
    OrderingViolation { last: u64, got: u64 },

    #[error("frame decode failed: {0}")]
    FrameDecode(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
