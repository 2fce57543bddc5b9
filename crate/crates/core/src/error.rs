use std::fmt;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by the reconstruction toolkit.
#[derive(Debug)]
pub enum Error {
    /// Grid dimensions are zero, inconsistent, or do not match between inputs.
    Dimension(String),
    /// A parameter is outside its documented range.
    Parameter(String),
    /// An input violates a mathematical precondition (e.g. a self-pair
    /// affinity query, or a zero-norm reference image).
    Domain(String),
    /// A phantom specification fails validation.
    InvalidSpec(String),
    /// The optimizer produced a non-finite energy or gradient.
    Divergence { iteration: usize },
    /// Underlying I/O failure.
    Io(std::io::Error),
    /// A file does not conform to its declared format.
    Format(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Dimension(msg) => write!(f, "dimension error: {msg}"),
            Error::Parameter(msg) => write!(f, "parameter error: {msg}"),
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::InvalidSpec(msg) => write!(f, "invalid phantom spec: {msg}"),
            Error::Divergence { iteration } => {
                write!(f, "numerical divergence at iteration {iteration}")
            }
            Error::Io(err) => write!(f, "i/o error: {err}"),
            Error::Format(msg) => write!(f, "format error: {msg}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(err) => Some(err),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err)
    }
}
