use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Inconsistent or unsupported input data.
    #[error("configuration error: {0}")]
    Config(String),

    /// Input outside the domain of an operation (degenerate polytope, origin not interior, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Iterative method failed to reach its tolerance.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A flow invariant was violated at a grid node.
    #[error("flow error at node {node:?}: {reason}")]
    Flow { node: Vec<usize>, reason: String },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
