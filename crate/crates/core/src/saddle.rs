//! The deterministic max-min problem
//!
//! ```text
//! phi = max_{beta >= 0} min_{tau >= 0} D(beta, tau)
//! D(beta, tau) = tau*beta*delta/2 + rho*beta/(2 tau) - beta^2/4 + Y(beta, tau)
//! Y(beta, tau) = (beta/alpha) (E[(H - sqrt(P) alpha)^2 1{H >= sqrt(P) alpha}] - 1/2)
//! alpha = 1/tau + 2 lambda/beta
//! ```
//!
//! `D` is convex in `tau` and strictly concave in `beta`, so both searches are
//! one-dimensional bracketing problems. Each axis is solved by bisection on the
//! sign of the analytic partial derivative; the derivatives only involve `Q`
//! and the normal density.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{central_square_band, q_function, truncated_square_upper, Threshold};

/// Scalar description of one problem instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Users per antenna, `m / n`.
    pub delta: f64,
    /// Power control factor scaling the target `sqrt(rho) s`.
    pub rho: f64,
    /// Ridge weight.
    pub lambda: f64,
    /// Per-antenna power cap `P`; `+inf` removes the box.
    pub p_max: f64,
    /// Noise variance.
    pub sigma2: f64,
}

impl SystemParams {
    pub fn new(delta: f64, rho: f64, lambda: f64, p_max: f64, sigma2: f64) -> Result<Self> {
        let p = SystemParams {
            delta,
            rho,
            lambda,
            p_max,
            sigma2,
        };
        p.validate()?;
        Ok(p)
    }

    /// Same as [`SystemParams::new`] but takes the noise standard deviation.
    pub fn with_sigma(delta: f64, rho: f64, lambda: f64, p_max: f64, sigma: f64) -> Result<Self> {
        if sigma.is_nan() || sigma < 0.0 {
            return Err(Error::InvalidParams(format!("sigma must be >= 0, got {sigma}")));
        }
        Self::new(delta, rho, lambda, p_max, sigma * sigma)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_nan() || v <= 0.0 || v == f64::INFINITY && name != "p_max" {
                Err(Error::InvalidParams(format!("{name} must be positive and finite, got {v}")))
            } else {
                Ok(())
            }
        };
        positive("delta", self.delta)?;
        positive("rho", self.rho)?;
        positive("p_max", self.p_max)?;
        for (name, v) in [("lambda", self.lambda), ("sigma2", self.sigma2)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParams(format!("{name} must be >= 0 and finite, got {v}")));
            }
        }
        Ok(())
    }

    /// A finite saddle point exists iff `lambda > 0`, or `lambda = 0` and `delta > 1`.
    pub fn is_feasible(&self) -> bool {
        self.lambda > 0.0 || self.delta > 1.0
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    fn require_feasible(&self) -> Result<()> {
        self.validate()?;
        if !self.is_feasible() {
            return Err(Error::Infeasible(format!(
                "lambda = 0 requires delta > 1 for a finite saddle point (delta = {})",
                self.delta
            )));
        }
        Ok(())
    }
}

/// Solution of the max-min problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaddlePoint {
    pub beta_star: f64,
    pub tau_star: f64,
    /// `1/tau* + 2 lambda / beta*`.
    pub alpha_star: f64,
    /// Optimal value `D(beta*, tau*)`.
    pub phi_bar: f64,
    /// Residual of the first-order fixed point in `tau`.
    pub residual: f64,
    pub solver_iterations: usize,
}

impl SaddlePoint {
    /// Builds a saddle point record from given coordinates, filling the derived fields.
    pub fn from_coordinates(beta_star: f64, tau_star: f64, params: &SystemParams) -> Self {
        let mut sp = SaddlePoint {
            beta_star,
            tau_star,
            alpha_star: alpha(beta_star, tau_star, params.lambda),
            phi_bar: objective_d(beta_star, tau_star, params),
            residual: 0.0,
            solver_iterations: 0,
        };
        sp.residual = fixed_point_residual(&sp, params);
        sp
    }

    /// `delta tau*^2 - rho`, the limiting per-antenna power before clamping.
    pub fn raw_power(&self, params: &SystemParams) -> f64 {
        params.delta * self.tau_star * self.tau_star - params.rho
    }
}

const SEARCH_CAP: usize = 200;
const BRACKET_GROWTH_CAP: usize = 200;
const BETA_FLOOR: f64 = 1e-8;

fn alpha(beta: f64, tau: f64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        1.0 / tau
    } else {
        1.0 / tau + 2.0 * lambda / beta
    }
}

fn threshold(p_max: f64, alpha: f64) -> Threshold {
    Threshold::clamped(p_max.sqrt() * alpha)
}

/// `P * Q(sqrt(P) alpha)`, zero when the box is absent.
fn clipped_power(p_max: f64, a: Threshold) -> f64 {
    if a.is_infinite() {
        0.0
    } else {
        p_max * q_function(a.value())
    }
}

/// Right-hand side of the fixed point `tau^2 delta - rho = power_map(alpha)`:
/// the second moment of the clipped variable `theta(H)`.
pub fn power_map(alpha: f64, p_max: f64) -> f64 {
    let a = threshold(p_max, alpha);
    2.0 * clipped_power(p_max, a) + central_square_band(a) / (alpha * alpha)
}

pub fn y_term(beta: f64, tau: f64, params: &SystemParams) -> f64 {
    let al = alpha(beta, tau, params.lambda);
    let a = threshold(params.p_max, al);
    (beta / al) * (truncated_square_upper(a) - 0.5)
}

pub fn objective_d(beta: f64, tau: f64, params: &SystemParams) -> f64 {
    let SystemParams { delta, rho, .. } = *params;
    tau * beta * delta / 2.0 + rho * beta / (2.0 * tau) - beta * beta / 4.0 + y_term(beta, tau, params)
}

/// `(2 tau^2 / beta) dD/dtau`; same sign as the partial derivative in `tau`.
fn tau_stationarity(beta: f64, tau: f64, params: &SystemParams) -> f64 {
    let al = alpha(beta, tau, params.lambda);
    params.delta * tau * tau - params.rho - power_map(al, params.p_max)
}

/// Lower end of the `tau` search: `tau* >= sqrt(rho / delta)`.
fn tau_floor(params: &SystemParams) -> f64 {
    (params.rho / params.delta).sqrt() * (1.0 - 1e-9)
}

/// Bisection for the sign change of an increasing function on `[lo, hi]`.
/// Returns the final bracket midpoint and the number of halvings.
fn bisect_increasing(
    mut lo: f64,
    mut hi: f64,
    f: impl Fn(f64) -> f64,
    what: &'static str,
) -> Result<(f64, usize)> {
    for it in 1..=SEARCH_CAP {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-15 * hi {
            return Ok((mid, it));
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let width = hi - lo;
    if width <= 1e-10 * hi {
        Ok((0.5 * (lo + hi), SEARCH_CAP))
    } else {
        Err(Error::Convergence {
            what,
            iterations: SEARCH_CAP,
            residual: width / hi,
        })
    }
}

/// Grows `hi` geometrically until `f(hi) >= 0`.
fn grow_bracket(mut hi: f64, f: impl Fn(f64) -> f64, what: &str) -> Result<f64> {
    for _ in 0..BRACKET_GROWTH_CAP {
        let v = f(hi);
        if v.is_nan() {
            return Err(Error::Bracket(format!("{what}: objective is NaN at {hi:.3e}")));
        }
        if v >= 0.0 {
            return Ok(hi);
        }
        hi *= 2.0;
        if !hi.is_finite() {
            break;
        }
    }
    Err(Error::Bracket(format!("{what}: upper bracket overflowed")))
}

/// Minimizes `tau -> D(beta, tau)` for fixed `beta`. Returns `(tau, D(beta, tau))`.
pub fn inner_min_tau(beta: f64, params: &SystemParams) -> Result<(f64, f64)> {
    let (tau, _) = inner_min_tau_counted(beta, params)?;
    Ok((tau, objective_d(beta, tau, params)))
}

fn inner_min_tau_counted(beta: f64, params: &SystemParams) -> Result<(f64, usize)> {
    if !(beta > 0.0) {
        return Err(Error::InvalidParams(format!("beta must be positive, got {beta}")));
    }
    let lo = tau_floor(params);
    let f = |t: f64| tau_stationarity(beta, t, params);
    if f(lo) >= 0.0 {
        return Ok((lo, 0));
    }
    let hi = grow_bracket((2.0 * lo).max(1.0), f, "inner tau search")?;
    bisect_increasing(lo, hi, f, "inner tau search")
}

/// Derivative of `beta -> min_tau D(beta, tau)` (envelope theorem) at the inner optimum.
fn outer_slope(beta: f64, params: &SystemParams) -> Result<(f64, usize)> {
    let (tau, iters) = inner_min_tau_counted(beta, params)?;
    let SystemParams { delta, rho, lambda, p_max, .. } = *params;
    let al = alpha(beta, tau, lambda);
    let a = threshold(p_max, al);
    let mut slope = tau * delta / 2.0 + rho / (2.0 * tau) - beta / 2.0
        + (truncated_square_upper(a) - 0.5) / al;
    if lambda > 0.0 {
        slope -= lambda / beta * power_map(al, p_max);
    }
    Ok((slope, iters))
}

/// Solves the max-min problem.
///
/// For `lambda = 0` the saddle point is found from the scalar fixed point in
/// `tau` alone and `beta*` follows in closed form; otherwise the outer
/// maximization over `beta` wraps [`inner_min_tau`].
pub fn solve_saddle(params: &SystemParams) -> Result<SaddlePoint> {
    params.require_feasible()?;
    let (beta, tau, iterations) = if params.lambda == 0.0 {
        solve_unregularized(params)?
    } else {
        solve_regularized(params)?
    };
    let mut sp = SaddlePoint::from_coordinates(beta, tau, params);
    sp.solver_iterations = iterations;
    let scale = 1.0_f64.max(params.rho).max(params.delta * tau * tau);
    if !(sp.residual <= 1e-8 * scale) {
        return Err(Error::Convergence {
            what: "saddle point fixed point",
            iterations,
            residual: sp.residual,
        });
    }
    Ok(sp)
}

fn solve_regularized(params: &SystemParams) -> Result<(f64, f64, usize)> {
    let mut total = 0usize;
    let slope = |b: f64, total: &mut usize| -> Result<f64> {
        let (s, it) = outer_slope(b, params)?;
        *total += it;
        Ok(s)
    };
    let lo = BETA_FLOOR;
    if slope(lo, &mut total)? <= 0.0 {
        return Err(Error::Convergence {
            what: "outer beta search (maximum at the floor)",
            iterations: 0,
            residual: lo,
        });
    }
    let mut hi = 4.0 * ((params.rho * params.delta).sqrt() + params.lambda + 1.0);
    let mut grown = 0;
    while slope(hi, &mut total)? > 0.0 {
        hi *= 2.0;
        grown += 1;
        if grown > BRACKET_GROWTH_CAP || !hi.is_finite() {
            return Err(Error::Bracket("outer beta search: maximum is not bounded".into()));
        }
    }
    let mut lo = lo;
    let mut outer = 0;
    let mut failure = None;
    while outer < SEARCH_CAP {
        outer += 1;
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-15 * hi {
            break;
        }
        match slope(mid, &mut total) {
            Ok(s) if s > 0.0 => lo = mid,
            Ok(_) => hi = mid,
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    if let Some(e) = failure {
        return Err(e);
    }
    if hi - lo > 1e-10 * hi {
        return Err(Error::Convergence {
            what: "outer beta search",
            iterations: outer,
            residual: (hi - lo) / hi,
        });
    }
    let beta = 0.5 * (lo + hi);
    let (tau, it) = inner_min_tau_counted(beta, params)?;
    Ok((beta, tau, total + outer + it))
}

/// `Y~(tau) = tau (E[(H - sqrt(P)/tau)^2 1{H >= sqrt(P)/tau}] - 1/2)`.
fn y_tilde(tau: f64, p_max: f64) -> f64 {
    tau * (truncated_square_upper(threshold(p_max, 1.0 / tau)) - 0.5)
}

fn solve_unregularized(params: &SystemParams) -> Result<(f64, f64, usize)> {
    let SystemParams { delta, rho, p_max, .. } = *params;
    let g = |t: f64| {
        let a = threshold(p_max, 1.0 / t);
        t * t * delta - rho - 2.0 * clipped_power(p_max, a) - t * t * central_square_band(a)
    };
    let lo = tau_floor(params);
    let (tau, iters) = if g(lo) >= 0.0 {
        (lo, 0)
    } else {
        let hi = grow_bracket((2.0 * lo).max(1.0), g, "tau fixed point")?;
        bisect_increasing(lo, hi, g, "tau fixed point")?
    };
    let beta = tau * delta + rho / tau + 2.0 * y_tilde(tau, p_max);
    if !(beta > 0.0) {
        return Err(Error::Infeasible(format!(
            "closed-form beta* = {beta:.6e} is not positive at tau* = {tau:.6e}"
        )));
    }
    Ok((beta, tau, iters))
}

/// `|tau*^2 delta - rho - 2P Q(sqrt(P) alpha*) - band(sqrt(P) alpha*) / alpha*^2|`.
pub fn fixed_point_residual(sp: &SaddlePoint, params: &SystemParams) -> f64 {
    (params.delta * sp.tau_star * sp.tau_star - params.rho - power_map(sp.alpha_star, params.p_max)).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::std_normal_pdf;

    fn params(delta: f64, rho: f64, lambda: f64, p_max: f64) -> SystemParams {
        SystemParams::new(delta, rho, lambda, p_max, 0.01).unwrap()
    }

    #[test]
    fn validation_rejects_bad_values() {
        assert!(SystemParams::new(0.0, 1.0, 0.0, 1.0, 0.0).is_err());
        assert!(SystemParams::new(1.0, -1.0, 0.0, 1.0, 0.0).is_err());
        assert!(SystemParams::new(1.0, 1.0, -0.1, 1.0, 0.0).is_err());
        assert!(SystemParams::new(1.0, 1.0, 0.1, 0.0, 0.0).is_err());
        assert!(SystemParams::new(1.0, 1.0, 0.1, f64::INFINITY, 0.0).is_ok());
        assert!(SystemParams::new(1.0, 1.0, 0.1, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn y_term_limits() {
        let big = params(2.0, 1.0, 0.5, f64::INFINITY);
        let (beta, tau) = (1.3, 0.8);
        let al = 1.0 / tau + 2.0 * 0.5 / beta;
        assert!((y_term(beta, tau, &big) + beta / (2.0 * al)).abs() < 1e-15);
        let tiny = params(2.0, 1.0, 0.5, 1e-300);
        assert!(y_term(beta, tau, &tiny).abs() < 1e-12);
    }

    #[test]
    fn y_term_reference_point() {
        let p = params(2.0, 1.0, 0.0, 1.0);
        // oracle: 2((1+1)Q(1) - phi(1) - 1/2)
        let expected = 2.0 * (2.0 * q_function(1.0) - std_normal_pdf(1.0) - 0.5);
        assert!((y_term(2.0, 1.0, &p) - expected).abs() < 1e-14);
        assert!((expected + 0.849_320_4).abs() < 1e-7);
        assert!((objective_d(2.0, 1.0, &p) - (2.0 + expected)).abs() < 1e-14);
    }

    #[test]
    fn y_term_is_nonpositive() {
        for &(b, t, l, pm) in &[(0.1, 0.2, 0.0, 1.0), (5.0, 3.0, 1.0, 0.01), (2.0, 0.5, 0.3, 100.0)] {
            assert!(y_term(b, t, &params(1.5, 1.0, l, pm)) <= 0.0);
        }
    }

    #[test]
    fn objective_vanishes_with_beta() {
        let p = params(1.5, 1.0, 0.2, 2.0);
        assert!(objective_d(1e-14, 1.0, &p).abs() < 1e-12);
    }

    #[test]
    fn objective_grows_in_tau_with_regularization() {
        let p = params(1.5, 1.0, 0.2, 2.0);
        assert!(objective_d(1.0, 1e8, &p) > 1e7);
    }

    #[test]
    fn inner_min_large_power_reduces_to_closed_form() {
        let p = params(2.0, 1.0, 0.0, 100.0);
        let beta = 2.0 * (1.0f64 * 2.0).sqrt();
        let (tau, value) = inner_min_tau(beta, &p).unwrap();
        // tau^2 (delta - 1) = rho
        assert!((tau - 1.0).abs() < 1e-12, "tau = {tau}");
        assert!(value <= objective_d(beta, (0.5f64).sqrt() * 2.0, &p));
    }

    #[test]
    fn inner_min_is_minimal() {
        let p = params(1.5, 0.7, 0.05, 3.0);
        for beta in [0.1, 1.0, 4.0] {
            let (tau, v) = inner_min_tau(beta, &p).unwrap();
            for k in [0.9, 0.99, 1.01, 1.1, 2.0] {
                assert!(v <= objective_d(beta, tau * k, &p) + 1e-14);
            }
        }
    }

    #[test]
    fn zf_regime_saddle() {
        let p = params(2.0, 1.0, 0.0, 100.0);
        let sp = solve_saddle(&p).unwrap();
        assert!((sp.tau_star - 1.0).abs() < 1e-12);
        assert!((sp.beta_star - 2.0).abs() < 1e-12);
        assert!(sp.residual < 1e-12);
    }

    #[test]
    fn small_power_unregularized() {
        let p = params(2.0, 1.0, 0.0, 0.01);
        let sp = solve_saddle(&p).unwrap();
        // independent scalar bisection on the tau equation
        let g = |t: f64| {
            let a = 0.1 / t;
            t * t * 2.0 - 1.0 - 0.02 * q_function(a) - t * t * (1.0 - 2.0 * (q_function(a) + a * std_normal_pdf(a)))
        };
        let (mut lo, mut hi) = (0.5f64.sqrt(), 5.0);
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if g(m) < 0.0 { lo = m } else { hi = m }
        }
        assert!((sp.tau_star - lo).abs() < 1e-12);
        assert!((sp.tau_star - 0.7104).abs() < 1e-4);
    }

    #[test]
    fn infeasible_unregularized() {
        let p = params(0.9, 1.0, 0.0, 1.0);
        assert!(matches!(solve_saddle(&p), Err(Error::Infeasible(_))));
        let p = params(1.0, 1.0, 0.0, 1.0);
        assert!(matches!(solve_saddle(&p), Err(Error::Infeasible(_))));
    }

    #[test]
    fn residual_detects_perturbation() {
        let p = params(1.5, 1.0, 0.01, 1.0);
        let sp = solve_saddle(&p).unwrap();
        assert!(sp.residual < 1e-8);
        let moved = SaddlePoint::from_coordinates(sp.beta_star, sp.tau_star + 0.1, &p);
        assert!(moved.residual > sp.residual);
        assert!(moved.residual > 1e-3);
    }

    #[test]
    fn zf_residual_at_analytic_point() {
        let p = params(2.0, 1.0, 0.0, 100.0);
        let sp = SaddlePoint::from_coordinates(2.0, 1.0, &p);
        assert!(sp.residual < 1e-12);
    }

    #[test]
    fn regularized_and_unregularized_paths_agree() {
        for &(delta, rho, pm) in &[(1.5, 1.0, 1.0), (2.0, 0.3, 5.0), (3.0, 4.0, 0.5)] {
            let a = solve_saddle(&params(delta, rho, 0.0, pm)).unwrap();
            let b = solve_saddle(&params(delta, rho, 1e-12, pm)).unwrap();
            assert!((a.beta_star - b.beta_star).abs() < 1e-5, "{a:?} {b:?}");
            assert!((a.tau_star - b.tau_star).abs() < 1e-5);
        }
    }

    #[test]
    fn outer_value_is_unimodal() {
        for &(delta, rho, lambda, pm) in &[(1.5, 1.0, 0.01, 1.0), (0.7, 2.0, 0.5, 10.0), (2.5, 0.2, 0.0, 3.0)] {
            let p = params(delta, rho, lambda, pm);
            let sp = solve_saddle(&p).unwrap();
            let values: Vec<f64> = (0..200)
                .map(|i| sp.beta_star * 10f64.powf(-2.0 + 4.0 * i as f64 / 199.0))
                .map(|b| inner_min_tau(b, &p).unwrap().1)
                .collect();
            let peak = values
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            for w in values[..=peak].windows(2) {
                assert!(w[1] >= w[0] - 1e-12);
            }
            for w in values[peak..].windows(2) {
                assert!(w[1] <= w[0] + 1e-12);
            }
        }
    }

    #[test]
    fn saddle_invariants() {
        for &(delta, rho, lambda, pm) in &[(0.5, 3.0, 0.8, 2.0), (1.2, 1e-3, 0.1, 50.0), (3.0, 10.0, 0.0, 0.5)] {
            let p = params(delta, rho, lambda, pm);
            let sp = solve_saddle(&p).unwrap();
            assert!(sp.beta_star > 0.0);
            assert!(sp.raw_power(&p) >= -1e-10);
            let al = 1.0 / sp.tau_star + 2.0 * lambda / sp.beta_star;
            assert!((sp.alpha_star - al).abs() < 1e-12);
            assert!(sp.residual < 1e-8 * rho.max(1.0));
        }
    }

    #[test]
    fn infinite_power_matches_rzf_closed_form() {
        let p = params(2.0, 1.0, 1.0, f64::INFINITY);
        let sp = solve_saddle(&p).unwrap();
        let s = 0.5f64.sqrt();
        let root = (2.0 - 1.0 / (1.0 + s).powi(2)).sqrt();
        assert!((sp.tau_star - 1.0 / root).abs() < 1e-10);
        assert!((sp.beta_star - 2.0 / (s * root)).abs() < 1e-10);
    }
}
