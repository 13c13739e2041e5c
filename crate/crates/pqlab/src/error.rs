use thiserror::Error;

/// Errors surfaced by the library operations.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an argument failed.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// An operation was asked of an integrand flavor that does not support it.
    #[error("unsupported flavor: {0}")]
    UnsupportedFlavor(String),
    /// Fields or meshes passed together do not live on the same discretization.
    #[error("mesh mismatch: {0}")]
    MeshMismatch(String),
    /// A derived exponent left its admissible range.
    #[error("out of range: {0}")]
    OutOfRange(String),
    /// The solver detected behaviour incompatible with its convexity contract.
    #[error("solver diagnostics: {0}")]
    Diagnostics(String),
    /// A self-check invariant failed; carries the offending evidence.
    #[error("internal invariant violated: {0}")]
    InternalInvariant(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
