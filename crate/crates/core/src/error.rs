use thiserror::Error;

/// Failures raised by the library. Every message names the module and
/// operation that produced it, e.g. `geometry::make_screen`.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("{op}: {msg}")]
    InvalidInput { op: &'static str, msg: String },
    #[error("{op}: {msg}")]
    Quadrature { op: &'static str, msg: String },
    #[error("{op}: {msg}")]
    LinearAlgebra { op: &'static str, msg: String },
}

impl Error {
    pub(crate) fn input(op: &'static str, msg: impl Into<String>) -> Self {
        Error::InvalidInput { op, msg: msg.into() }
    }

    pub(crate) fn quad(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Quadrature { op, msg: msg.into() }
    }

    pub(crate) fn linalg(op: &'static str, msg: impl Into<String>) -> Self {
        Error::LinearAlgebra { op, msg: msg.into() }
    }

    /// True for quadrature and linear-algebra failures, false for bad input.
    pub fn is_numerical(&self) -> bool {
        !matches!(self, Error::InvalidInput { .. })
    }

    pub fn operation(&self) -> &'static str {
        match self {
            Error::InvalidInput { op, .. } | Error::Quadrature { op, .. } | Error::LinearAlgebra { op, .. } => op,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
