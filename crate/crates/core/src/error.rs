use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A special-function evaluation did not reach its accuracy target.
    #[error("special function {func} failed at nu = {nu}, z = {z}: {reason}")]
    SpecialFunction {
        func: &'static str,
        nu: String,
        z: String,
        reason: String,
    },

    /// A numerical routine (quadrature, inversion, root finding) failed.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// A series that is assumed to converge did not settle.
    #[error("convergence failure: {0}")]
    Convergence(String),

    /// A spectrum scan could not account for every eigenvalue.
    #[error("missed root: {0}")]
    MissedRoot(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}
