use thiserror::Error;

use crate::precoder::PrecoderSolution;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:.3e})")]
    Convergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("limited-PAPR solver stopped after {} iterations with KKT residual {:.3e}", .0.iterations, .0.kkt_residual)]
    PrecoderConvergence(Box<PrecoderSolution>),

    #[error("could not bracket a minimum: {0}")]
    Bracket(String),

    #[error("negative per-antenna power {0:.3e}: corrupted saddle point")]
    NegativePower(f64),

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("Gram matrix is numerically singular")]
    Singular,

    #[error("need at least {needed} trials, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("no distortion samples with s = {0:+}")]
    EmptyBranch(i8),

    #[error("target per-antenna power {target} is unreachable (cap {p_max})")]
    TargetUnreachable { target: f64, p_max: f64 },

    #[error("per-antenna power is not increasing in rho near rho = {rho:.6e}")]
    NonMonotone { rho: f64 },
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Infeasible(_) | Error::TargetUnreachable { .. } | Error::InvalidParams(_) => 2,
            Error::InsufficientData { .. } | Error::EmptyBranch(_) => 4,
            Error::NonMonotone { .. } => 5,
            _ => 3,
        }
    }
}
