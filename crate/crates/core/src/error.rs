use thiserror::Error;

/// Errors raised by the toolkit. Each variant names the field or module at fault.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    Parameter { field: &'static str, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("binding error: {0}")]
    Binding(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("connectivity error: exterior cell {cell} has no weight to the interior")]
    Connectivity { cell: usize },

    #[error("input error: {0}")]
    Input(String),

    #[error("unsupported mode: {0}")]
    Unsupported(String),

    #[error("divergence: non-finite energy after {iterations} iterations")]
    Divergence {
        iterations: usize,
        last_iterate: Vec<f64>,
    },

    #[error("mountain-pass geometry check failed: {0}")]
    Geometry(String),

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            field,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
