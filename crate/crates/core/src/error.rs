use thiserror::Error;

/// Failure signals shared by every numerical module.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A precondition on shapes, sample counts or symmetry did not hold.
    #[error("contract violation: {0}")]
    Contract(String),
    /// An input left the domain of the operation (non-positive eigenvalue, lost convexity, ...).
    #[error("domain error: {what} (offending value {value:e})")]
    Domain { what: String, value: f64 },
    /// Adaptive quadrature ran out of panels; `best` is the best available estimate.
    #[error("quadrature did not reach tolerance: best estimate {best:e}, error estimate {err_est:e}")]
    Tolerance { best: f64, err_est: f64 },
    /// Two vertices of a comparison triangle coincide.
    #[error("degenerate triangle: {0}")]
    DegenerateTriangle(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn domain(what: impl Into<String>, value: f64) -> Self {
        Error::Domain { what: what.into(), value }
    }
}
