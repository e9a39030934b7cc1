use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An input violated a documented precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// Newton iteration did not reach the requested tolerance.
    #[error("no convergence after {iterations} iterations (residual history: {history:?})")]
    Convergence { iterations: usize, history: Vec<f64> },

    /// The linearized operator became numerically singular.
    #[error("bifurcation: smallest singular value estimate {sigma_min:e} below {threshold:e}")]
    Bifurcation { sigma_min: f64, threshold: f64 },

    /// The iterative linear solver stalled.
    #[error("linear solver stalled at relative residual {relative_residual:e}")]
    LinearSolver { relative_residual: f64 },

    /// Frame integration drifted away from the unitary group.
    #[error("frame integration drift {drift:e} exceeds {threshold:e}")]
    Integration { drift: f64, threshold: f64 },

    /// The flat connection is too far from flat to integrate.
    #[error("flatness defect {defect:e} exceeds {threshold:e}")]
    NotFlat { defect: f64, threshold: f64 },

    /// A curve or polynomial is singular where smoothness is required.
    #[error("degenerate: {0}")]
    Degenerate(String),

    /// A quadrature or root-finding routine failed to converge.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for errors caused by invalid input rather than numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Domain(_) | Error::Parse(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
