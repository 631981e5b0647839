use thiserror::Error;

/// Errors raised by the analysis library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A matrix failed the density-matrix checks (hermiticity, trace, positivity).
    #[error("not a physical state: {0}")]
    Unphysical(String),

    /// The state carries no correlations, so no preferred measurement direction exists.
    #[error("no signal: {0}")]
    NoSignal(String),

    /// The Devetak-Winter rate vanishes, so no key (and no threshold) can be derived.
    #[error("no security: {0}")]
    NoSecurity(String),

    /// Malformed input data (dataset, fixture or density-matrix file).
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
