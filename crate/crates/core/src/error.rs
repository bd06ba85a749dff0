use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by samplers, quadrature and the verification layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("matrix is not unitary: ||U*U - I||_max = {deviation:e}")]
    NotUnitary { deviation: f64 },

    #[error("numerically singular Ginibre draw after redraw")]
    SingularDraw,

    #[error("eigenvalue iteration did not converge after {iterations} iterations (dim {dim})")]
    NonConvergence { iterations: usize, dim: usize },

    #[error(
        "moment series for (j={j}, k={k}) did not reach tolerance: partial sum {partial}, achieved bound {bound:e}"
    )]
    SeriesTolerance {
        j: usize,
        k: usize,
        partial: Complex64,
        bound: f64,
    },

    #[error("Cholesky factorization failed at pivot {pivot} (condition estimate {condition:e})")]
    Cholesky { pivot: usize, condition: f64 },

    #[error("orthonormality residual {residual:e} exceeds {limit:e}")]
    Orthonormality { residual: f64, limit: f64 },

    #[error("rejection envelope violated: density {value:e} above envelope {envelope:e}")]
    EnvelopeViolation { value: f64, envelope: f64 },

    #[error("rejection sampler gave up after {proposals} proposals (log envelope {log_bound:.1}); use hp_mh")]
    RejectionBudget { proposals: u64, log_bound: f64 },

    #[error("too few samples: got {got}, need at least {need}")]
    TooFewSamples { got: usize, need: usize },

    #[error("point {point} lies outside the open unit disc")]
    OutsideDisc { point: Complex64 },
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }

    /// True for conditioning, convergence and envelope failures, as opposed
    /// to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularDraw
                | Error::NonConvergence { .. }
                | Error::SeriesTolerance { .. }
                | Error::Cholesky { .. }
                | Error::Orthonormality { .. }
                | Error::EnvelopeViolation { .. }
                | Error::RejectionBudget { .. }
        )
    }
}
