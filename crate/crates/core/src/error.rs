use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("no convergence in {what}: {detail}")]
    NonConvergence { what: String, detail: String },

    #[error("non-finite value in {what} at {at}")]
    NonFinite { what: String, at: String },

    #[error("quadratic form is not positive definite (smallest eigenvalue {0:e})")]
    Indefinite(f64),

    #[error("padding insufficient: unitarity deficit {deficit:e} above {threshold:e}")]
    PadInsufficient { deficit: f64, threshold: f64 },

    #[error("overflow: {0}")]
    Overflow(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
