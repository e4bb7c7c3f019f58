use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid dimension {dim}: {reason}")]
    InvalidDimension { dim: usize, reason: &'static str },

    #[error(
        "truncation dim {dim} too small for |alpha| = {alpha_abs}: tail mass {tail_mass:e} >= 1e-10, \
         need dim >= {min_dim}"
    )]
    TruncationTooSmall {
        alpha_abs: f64,
        dim: usize,
        tail_mass: f64,
        min_dim: usize,
    },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: alloc::vec::Vec<usize>,
        right: alloc::vec::Vec<usize>,
    },

    #[error("{what} = {value} outside [{min}, {max}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("infeasible schedule: fast-forward drive reaches {omega_ff} at reference time {lambda} ns")]
    InfeasibleSchedule { lambda: f64, omega_ff: f64 },

    #[error("root solve did not converge at t = {t} ns (residual {residual:e})")]
    SolverNonConvergence { t: f64, residual: f64 },

    #[error("step size underflow at t = {t} ns (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("norm drift {norm_drift:e} exceeds 1e-6")]
    Accuracy { norm_drift: f64 },

    #[error("quadrature did not reach tolerance on [{a}, {b}] (estimate {estimate:e})")]
    Quadrature { a: f64, b: f64, estimate: f64 },
}

impl Error {
    /// True for errors that indicate a physically infeasible schedule rather
    /// than a numerical or input problem.
    pub fn is_infeasible(&self) -> bool {
        matches!(self, Error::InfeasibleSchedule { .. })
    }

    /// True for integrator, root-solver, quadrature and truncation failures.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SolverNonConvergence { .. }
                | Error::StepUnderflow { .. }
                | Error::Accuracy { .. }
                | Error::Quadrature { .. }
                | Error::TruncationTooSmall { .. }
        )
    }
}
