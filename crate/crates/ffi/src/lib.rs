//! C ABI over `papr-core`.
//!
//! Every fallible function returns a [`PaprStatus`]; on failure the message is
//! available from [`papr_last_error`] on the same thread. Handles are created by
//! `*_new` / `*_run` functions and released by the matching `*_free`. Panics never
//! cross the boundary: they are reported as `PAPR_STATUS_PANIC`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nalgebra::{DMatrix, DVector};
use papr_core::monte_carlo::{run_experiment, EmpiricalReport, MetricSummary, TrialRecord};
use papr_core::precoder::{precode, ChannelInstance};
use papr_core::special_cases::{
    large_delta_limit, large_rho_expansion, rzf_limit, rzf_s_star, small_delta_limit, small_rho_limit, zf_limit,
    LimitReport,
};
use papr_core::{full_report, rho_for_target_pb, Error, ExperimentSpec, Method, SolverOptions, SystemParams};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PaprStatus {
    Ok = 0,
    /// Bad parameter value, null pointer or unknown enum value.
    InvalidArgument = 1,
    /// No finite saddle point exists (`lambda = 0` with `delta <= 1`).
    Infeasible = 2,
    /// The requested per-antenna power cannot be reached.
    TargetUnreachable = 3,
    /// An iterative solver hit its budget; outputs hold the last iterate where documented.
    NotConverged = 4,
    /// Too few trials or samples for the requested statistic.
    InsufficientData = 5,
    /// Per-antenna power was found to decrease in rho.
    NonMonotone = 6,
    /// Gram matrix is numerically singular.
    Singular = 7,
    /// Quadrature, bracketing or another numerical failure.
    Numerical = 8,
    /// The requested quantity does not exist for this configuration.
    Unavailable = 9,
    /// Internal panic caught at the boundary.
    Panic = 10,
}

/// Precoding method.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PaprMethod {
    LimitedPapr = 0,
    Rzf = 1,
    Zf = 2,
    OneBit = 3,
}

/// Closed-form limiting regime.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PaprRegime {
    /// Box removed, `lambda > 0`.
    Rzf = 0,
    /// Box removed, `lambda = 0`, `delta > 1`.
    Zf = 1,
    SmallDelta = 2,
    LargeDelta = 3,
    SmallRho = 4,
    LargeRho = 5,
}

/// Per-trial metric selector for experiment summaries.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PaprMetric {
    /// Per-antenna transmit power.
    Pb = 0,
    /// Per-user distortion power.
    Pd = 1,
    Ber = 2,
    SinrLb = 3,
    SinrUp = 4,
}

/// Large-system predictions at the saddle point.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PaprReport {
    pub beta_star: f64,
    pub tau_star: f64,
    pub alpha_star: f64,
    pub pb: f64,
    pub pd: f64,
    pub sinr_lb: f64,
    pub sinr_up: f64,
    pub pe: f64,
    pub distortion_std: f64,
    pub residual: f64,
}

/// Closed-form limit; `s_star` is NaN outside the box-free regimes.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PaprLimit {
    pub beta: f64,
    pub tau: f64,
    pub pb: f64,
    pub pd: f64,
    pub sinr_lb: f64,
    pub pe: f64,
    pub s_star: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PaprTune {
    pub rho: f64,
    pub achieved_pb: f64,
    pub iterations: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PaprSolveInfo {
    /// `||Hx - sqrt(rho) s||^2 + lambda ||x||^2`.
    pub objective: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
}

/// Mean and standard error of one metric; `theory` and `z` are NaN without a limiting law.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PaprSummary {
    pub mean: f64,
    pub std_err: f64,
    pub theory: f64,
    pub z: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PaprTrial {
    pub pb: f64,
    pub pd: f64,
    pub ber: f64,
    pub sinr_lb: f64,
    pub sinr_up: f64,
    pub seed: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PaprDistribution {
    pub wasserstein2_x: f64,
    pub wasserstein2_self: f64,
    pub ks_plus: f64,
    pub ks_minus: f64,
    pub ks_critical_plus: f64,
    pub ks_critical_minus: f64,
    pub passes: bool,
}

/// Validated system parameters.
pub struct PaprParams {
    inner: SystemParams,
}

/// Finished Monte Carlo experiment.
pub struct PaprExperiment {
    report: EmpiricalReport,
    trials: Vec<TrialRecord>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

enum Failure {
    Core(Error),
    Arg(String),
    Unavailable(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn status_of(e: &Error) -> PaprStatus {
    match e {
        Error::InvalidParams(_) => PaprStatus::InvalidArgument,
        Error::Infeasible(_) => PaprStatus::Infeasible,
        Error::TargetUnreachable { .. } => PaprStatus::TargetUnreachable,
        Error::Convergence { .. } | Error::PrecoderConvergence(_) => PaprStatus::NotConverged,
        Error::InsufficientData { .. } | Error::EmptyBranch(_) => PaprStatus::InsufficientData,
        Error::NonMonotone { .. } => PaprStatus::NonMonotone,
        Error::Singular => PaprStatus::Singular,
        _ => PaprStatus::Numerical,
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PaprStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            clear_last_error();
            PaprStatus::Ok
        }
        Ok(Err(Failure::Core(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Arg(msg))) => {
            set_last_error(msg);
            PaprStatus::InvalidArgument
        }
        Ok(Err(Failure::Unavailable(msg))) => {
            set_last_error(msg);
            PaprStatus::Unavailable
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("internal panic: {msg}"));
            PaprStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure::Arg(format!("{name} is null")))
}

unsafe fn out<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure::Arg(format!("{name} is null")))
}

fn method_of(code: i32) -> Result<Method, Failure> {
    Ok(match code {
        0 => Method::LimitedPapr,
        1 => Method::Rzf,
        2 => Method::Zf,
        3 => Method::OneBit,
        _ => return Err(Failure::Arg(format!("unknown method {code}"))),
    })
}

fn options(tol: f64, max_iter: usize) -> SolverOptions {
    let d = SolverOptions::default();
    SolverOptions {
        tol: if tol > 0.0 { tol } else { d.tol },
        max_iter: if max_iter > 0 { max_iter } else { d.max_iter },
    }
}

/// Message of the last failed call on this thread, or null after a success.
/// The pointer stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn papr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Static description of a status code; unknown codes are accepted.
#[no_mangle]
pub extern "C" fn papr_status_string(status: i32) -> *const c_char {
    let s: &'static [u8] = match status {
        0 => b"ok\0",
        1 => b"invalid argument\0",
        2 => b"infeasible\0",
        3 => b"target unreachable\0",
        4 => b"not converged\0",
        5 => b"insufficient data\0",
        6 => b"non-monotone\0",
        7 => b"singular\0",
        8 => b"numerical failure\0",
        9 => b"unavailable\0",
        10 => b"internal panic\0",
        _ => b"unknown status\0",
    };
    s.as_ptr().cast()
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn papr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Validates and stores parameters. `p_max` may be `+inf` to remove the box.
///
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn papr_params_new(
    delta: f64,
    rho: f64,
    lambda: f64,
    p_max: f64,
    sigma2: f64,
    out_params: *mut *mut PaprParams,
) -> PaprStatus {
    guard(|| {
        let slot = out(out_params, "out_params")?;
        *slot = ptr::null_mut();
        let inner = SystemParams::new(delta, rho, lambda, p_max, sigma2)?;
        *slot = Box::into_raw(Box::new(PaprParams { inner }));
        Ok(())
    })
}

/// `params` must come from [`papr_params_new`] and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn papr_params_free(params: *mut PaprParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Copy of `params` with a different `rho`.
///
/// `params` must be a live handle and `out_params` writable.
#[no_mangle]
pub unsafe extern "C" fn papr_params_with_rho(
    params: *const PaprParams,
    rho: f64,
    out_params: *mut *mut PaprParams,
) -> PaprStatus {
    guard(|| {
        let p = deref(params, "params")?;
        let slot = out(out_params, "out_params")?;
        *slot = ptr::null_mut();
        let inner = p.inner.with_rho(rho);
        inner.validate()?;
        *slot = Box::into_raw(Box::new(PaprParams { inner }));
        Ok(())
    })
}

/// Whether a finite saddle point exists.
///
/// `params` must be a live handle or null (which yields false).
#[no_mangle]
pub unsafe extern "C" fn papr_params_is_feasible(params: *const PaprParams) -> bool {
    params.as_ref().is_some_and(|p| p.inner.is_feasible())
}

/// Solves the saddle problem and fills the large-system predictions.
///
/// `params` must be a live handle and `out_report` writable.
#[no_mangle]
pub unsafe extern "C" fn papr_report(params: *const PaprParams, out_report: *mut PaprReport) -> PaprStatus {
    guard(|| {
        let p = deref(params, "params")?;
        let o = out(out_report, "out_report")?;
        let r = full_report(&p.inner)?;
        *o = PaprReport {
            beta_star: r.saddle.beta_star,
            tau_star: r.saddle.tau_star,
            alpha_star: r.saddle.alpha_star,
            pb: r.pb_star,
            pd: r.pd_star,
            sinr_lb: r.sinr_lb_star,
            sinr_up: r.sinr_up_star,
            pe: r.pe_star,
            distortion_std: r.distortion_std,
            residual: r.saddle.residual,
        };
        Ok(())
    })
}

/// Closed-form limit in the chosen regime (a [`PaprRegime`] value).
///
/// `params` must be a live handle and `out_limit` writable.
#[no_mangle]
pub unsafe extern "C" fn papr_limit(params: *const PaprParams, regime: i32, out_limit: *mut PaprLimit) -> PaprStatus {
    guard(|| {
        let p = deref(params, "params")?;
        let o = out(out_limit, "out_limit")?;
        let f: fn(&SystemParams) -> papr_core::Result<LimitReport> = match regime {
            0 => rzf_limit,
            1 => zf_limit,
            2 => small_delta_limit,
            3 => large_delta_limit,
            4 => small_rho_limit,
            5 => large_rho_expansion,
            _ => return Err(Failure::Arg(format!("unknown regime {regime}"))),
        };
        let r = f(&p.inner)?;
        *o = PaprLimit {
            beta: r.beta_limit,
            tau: r.tau_limit,
            pb: r.pb,
            pd: r.pd,
            sinr_lb: r.sinr_lb,
            pe: r.pe,
            s_star: r.s_star.unwrap_or(f64::NAN),
        };
        Ok(())
    })
}

/// Positive root of the box-free fixed-point equation for `(delta, lambda)`.
///
/// `out_s` must be writable.
#[no_mangle]
pub unsafe extern "C" fn papr_rzf_s_star(delta: f64, lambda: f64, out_s: *mut f64) -> PaprStatus {
    guard(|| {
        let o = out(out_s, "out_s")?;
        if !(delta > 0.0 && delta.is_finite() && lambda > 0.0 && lambda.is_finite()) {
            return Err(Failure::Arg(format!("need delta > 0 and lambda > 0, got {delta}, {lambda}")));
        }
        *o = rzf_s_star(delta, lambda);
        Ok(())
    })
}

/// Finds `rho` whose predicted per-antenna power equals `target_pb`. `tol <= 0` uses the default.
///
/// `params` must be a live handle and `out_tune` writable.
#[no_mangle]
pub unsafe extern "C" fn papr_tune_rho(
    params: *const PaprParams,
    target_pb: f64,
    tol: f64,
    out_tune: *mut PaprTune,
) -> PaprStatus {
    guard(|| {
        let p = deref(params, "params")?;
        let o = out(out_tune, "out_tune")?;
        let tol = if tol > 0.0 { tol } else { papr_core::tuning::DEFAULT_TOL };
        let r = rho_for_target_pb(target_pb, &p.inner, tol)?;
        *o = PaprTune {
            rho: r.rho,
            achieved_pb: r.achieved_pb,
            iterations: r.iterations,
        };
        Ok(())
    })
}

/// Precodes one channel. `h` is `m x n` row-major, `s` holds `m` symbols in `{-1, +1}`,
/// `x_out` receives `n` entries. `tol <= 0` and `max_iter == 0` select defaults.
/// On `PAPR_STATUS_NOT_CONVERGED` the last iterate is still written.
///
/// `h`, `s` and `x_out` must point to `m * n`, `m` and `n` doubles; `out_info` may be null.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn papr_precode(
    params: *const PaprParams,
    h: *const f64,
    s: *const f64,
    m: usize,
    n: usize,
    method: i32,
    tol: f64,
    max_iter: usize,
    x_out: *mut f64,
    out_info: *mut PaprSolveInfo,
) -> PaprStatus {
    guard(|| {
        let p = deref(params, "params")?;
        let method = method_of(method)?;
        if h.is_null() || s.is_null() || x_out.is_null() {
            return Err(Failure::Arg("h, s and x_out must be non-null".into()));
        }
        if m == 0 || n == 0 {
            return Err(Failure::Arg("m and n must be positive".into()));
        }
        let len = m.checked_mul(n).ok_or_else(|| Failure::Arg("m * n overflows".into()))?;
        let hm = DMatrix::from_row_slice(m, n, std::slice::from_raw_parts(h, len));
        let sv = DVector::from_column_slice(std::slice::from_raw_parts(s, m));
        let inst = ChannelInstance::new(hm, sv)?;
        let x = std::slice::from_raw_parts_mut(x_out, n);
        let (sol, err) = match precode(&inst, &p.inner, method, options(tol, max_iter)) {
            Ok(sol) => (sol, None),
            Err(Error::PrecoderConvergence(sol)) => ((*sol).clone(), Some(Error::PrecoderConvergence(sol))),
            Err(e) => return Err(e.into()),
        };
        x.copy_from_slice(sol.x.as_slice());
        if let Some(info) = out_info.as_mut() {
            *info = PaprSolveInfo {
                objective: sol.objective,
                kkt_residual: sol.kkt_residual,
                iterations: sol.iterations,
            };
        }
        err.map_or(Ok(()), |e| Err(e.into()))
    })
}

/// Runs `trials` independent trials with `n` antennas and seeds `seed + i`.
/// Results are deterministic for a given input regardless of thread count.
///
/// `params` must be a live handle and `out_experiment` writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn papr_experiment_run(
    params: *const PaprParams,
    n: usize,
    trials: usize,
    seed: u64,
    method: i32,
    tol: f64,
    max_iter: usize,
    out_experiment: *mut *mut PaprExperiment,
) -> PaprStatus {
    guard(|| {
        let p = deref(params, "params")?;
        let slot = out(out_experiment, "out_experiment")?;
        *slot = ptr::null_mut();
        let spec = ExperimentSpec {
            params: p.inner,
            n,
            trials,
            base_seed: seed,
            method: method_of(method)?,
            opts: options(tol, max_iter),
        };
        let (report, trials) = run_experiment(&spec)?;
        *slot = Box::into_raw(Box::new(PaprExperiment { report, trials }));
        Ok(())
    })
}

/// `experiment` must come from [`papr_experiment_run`] and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn papr_experiment_free(experiment: *mut PaprExperiment) {
    if !experiment.is_null() {
        drop(Box::from_raw(experiment));
    }
}

/// Number of trials, or 0 for a null handle.
///
/// `experiment` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn papr_experiment_trial_count(experiment: *const PaprExperiment) -> usize {
    experiment.as_ref().map_or(0, |e| e.trials.len())
}

/// Summary of one metric (a [`PaprMetric`] value) against the theory, when available.
///
/// `experiment` must be a live handle and `out_summary` writable.
#[no_mangle]
pub unsafe extern "C" fn papr_experiment_summary(
    experiment: *const PaprExperiment,
    metric: i32,
    out_summary: *mut PaprSummary,
) -> PaprStatus {
    guard(|| {
        let e = deref(experiment, "experiment")?;
        let o = out(out_summary, "out_summary")?;
        let r = &e.report;
        let t = r.theory.as_ref();
        let (s, theory): (&MetricSummary, Option<f64>) = match metric {
            0 => (&r.pb, t.map(|t| t.pb_star)),
            1 => (&r.pd, t.map(|t| t.pd_star)),
            2 => (&r.ber, t.map(|t| t.pe_star)),
            3 => (&r.sinr_lb_est, t.map(|t| t.sinr_lb_star)),
            4 => (&r.sinr_up_est, t.map(|t| t.sinr_up_star)),
            _ => return Err(Failure::Arg(format!("unknown metric {metric}"))),
        };
        *o = PaprSummary {
            mean: s.mean,
            std_err: s.std_err,
            theory: theory.unwrap_or(f64::NAN),
            z: theory.map_or(f64::NAN, |v| s.z_score(v)),
        };
        Ok(())
    })
}

/// Metrics of trial `index`.
///
/// `experiment` must be a live handle and `out_trial` writable.
#[no_mangle]
pub unsafe extern "C" fn papr_experiment_trial(
    experiment: *const PaprExperiment,
    index: usize,
    out_trial: *mut PaprTrial,
) -> PaprStatus {
    guard(|| {
        let e = deref(experiment, "experiment")?;
        let o = out(out_trial, "out_trial")?;
        let t = e
            .trials
            .get(index)
            .ok_or_else(|| Failure::Arg(format!("trial {index} out of range ({} trials)", e.trials.len())))?;
        *o = PaprTrial {
            pb: t.pb,
            pd: t.pd,
            ber: t.ber,
            sinr_lb: t.sinr_lb_est,
            sinr_up: t.sinr_up_est,
            seed: t.seed,
        };
        Ok(())
    })
}

/// Distributional agreement with the limiting law. `PAPR_STATUS_UNAVAILABLE` when the
/// method has no limiting law.
///
/// `experiment` must be a live handle and `out_distribution` writable.
#[no_mangle]
pub unsafe extern "C" fn papr_experiment_distribution(
    experiment: *const PaprExperiment,
    out_distribution: *mut PaprDistribution,
) -> PaprStatus {
    guard(|| {
        let e = deref(experiment, "experiment")?;
        let o = out(out_distribution, "out_distribution")?;
        let d = e
            .report
            .distribution
            .ok_or_else(|| Failure::Unavailable("no limiting law for this method".into()))?;
        *o = PaprDistribution {
            wasserstein2_x: d.wasserstein2_x,
            wasserstein2_self: d.wasserstein2_self,
            ks_plus: d.ks_distortion_plus,
            ks_minus: d.ks_distortion_minus,
            ks_critical_plus: d.ks_critical_plus,
            ks_critical_minus: d.ks_critical_minus,
            passes: d.passes(),
        };
        Ok(())
    })
}
