//! Limited-PAPR regularized least-squares downlink precoding.
//!
//! The crate has three layers:
//!
//! * the asymptotic theory: [`saddle`] solves the scalar max-min problem whose
//!   saddle point `(beta*, tau*)` predicts every large-system metric, and
//!   [`asymptotics`] / [`special_cases`] turn it into closed-form numbers;
//! * the finite-dimensional precoders in [`precoder`] (box-constrained RLS,
//!   RZF, ZF and one-bit);
//! * the Monte Carlo harness in [`monte_carlo`] that measures the precoders on
//!   random channels and compares them with the theory.
//!
//! [`tuning`] inverts the per-antenna power map and [`cli`] / [`validation`]
//! back the `papr` binary.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod cli;
pub mod error;
pub mod gaussian;
pub mod monte_carlo;
pub mod oracle;
pub mod precoder;
pub mod quadrature;
pub mod saddle;
pub mod special_cases;
pub mod stats;
pub mod tuning;
pub mod validation;

pub use asymptotics::{full_report, AsymptoticReport, DistortionLaw};
pub use error::{Error, Result};
pub use monte_carlo::{EmpiricalReport, ExperimentSpec, TrialRecord};
pub use precoder::{ChannelInstance, Method, PrecoderSolution, SolverOptions};
pub use saddle::{solve_saddle, SaddlePoint, SystemParams};
pub use special_cases::{LimitRegime, LimitReport};
pub use tuning::{rho_for_target_pb, TuneResult};
