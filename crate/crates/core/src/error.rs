use alloc::string::String;

/// Failures reported by the numerical routines.
///
/// Tolerance misses carry the achieved error so callers can decide whether
/// a looser answer is still usable.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("quadrature tolerance not met: achieved {achieved:.3e}, requested {requested:.3e}")]
    QuadratureTolerance { value: f64, achieved: f64, requested: f64 },

    #[error("series evaluation not certified at s = {s:.3e} (certified for s >= {boundary:.3e})")]
    Uncertified { s: f64, boundary: f64 },

    #[error("eigensolver did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("matrix is not positive definite (pivot {pivot} = {value:.3e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("identity violated: {what}")]
    IdentityViolated { what: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidArgument { name, reason: reason.into() }
}
