use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid threshold {0}: thresholds must be non-negative")]
    InvalidThreshold(f64),

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("invalid count: {0}")]
    InvalidCount(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate filter: squared norm {0} is not positive")]
    DegenerateFilter(f64),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("format error at byte {offset}: {msg}")]
    Format { offset: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::InvalidShape(msg.into())
    }

    pub(crate) fn format(offset: usize, msg: impl Into<String>) -> Self {
        Error::Format { offset, msg: msg.into() }
    }

    /// True for errors caused by the filesystem rather than by bad input.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_))
    }
}
