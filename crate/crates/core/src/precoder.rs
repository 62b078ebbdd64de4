//! Finite-dimensional precoders.
//!
//! The limited-PAPR precoder solves the box-constrained ridge problem
//!
//! ```text
//! minimize ||H x - sqrt(rho) s||^2 + lambda ||x||^2   subject to |x_i| <= sqrt(P)
//! ```
//!
//! with accelerated projected gradient (FISTA). The projection is a clip, so
//! each iteration costs a few matrix-vector products.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::saddle::SystemParams;

/// One channel realization with its symbol vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelInstance {
    /// `m x n` channel.
    pub h: DMatrix<f64>,
    /// Length-`m` BPSK symbols.
    pub s: DVector<f64>,
}

impl ChannelInstance {
    pub fn new(h: DMatrix<f64>, s: DVector<f64>) -> Result<Self> {
        if h.nrows() != s.len() || h.ncols() == 0 || s.is_empty() {
            return Err(Error::InvalidParams(format!(
                "channel is {}x{} but there are {} symbols",
                h.nrows(),
                h.ncols(),
                s.len()
            )));
        }
        if s.iter().any(|&v| v != 1.0 && v != -1.0) {
            return Err(Error::InvalidParams("symbols must be +1 or -1".into()));
        }
        Ok(ChannelInstance { h, s })
    }

    /// Antenna count.
    pub fn n(&self) -> usize {
        self.h.ncols()
    }

    /// User count.
    pub fn m(&self) -> usize {
        self.h.nrows()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    LimitedPapr,
    Rzf,
    Zf,
    OneBit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Bound on the per-coordinate gradient-mapping norm.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-8, max_iter: 20_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSolution {
    pub x: DVector<f64>,
    /// Unnormalized cost `||Hx - sqrt(rho) s||^2 + lambda ||x||^2`.
    pub objective: f64,
    /// Optimality certificate; its meaning depends on the method, see each precoder.
    pub kkt_residual: f64,
    pub iterations: usize,
    pub method: Method,
}

/// Precodes with the chosen method.
pub fn precode(inst: &ChannelInstance, params: &SystemParams, method: Method, opts: SolverOptions) -> Result<PrecoderSolution> {
    match method {
        Method::LimitedPapr => limited_papr_precode(inst, params, opts),
        Method::Rzf => rzf_precode(inst, params.rho, params.lambda),
        Method::Zf => zf_precode(inst, params.rho),
        Method::OneBit => one_bit_precode(inst, params),
    }
}

/// `||H x - sqrt(rho) s||^2 + lambda ||x||^2`.
pub fn objective(x: &DVector<f64>, inst: &ChannelInstance, rho: f64, lambda: f64) -> f64 {
    let r = &inst.h * x - &inst.s * rho.sqrt();
    r.norm_squared() + lambda * x.norm_squared()
}

/// Largest eigenvalue of `H^T H` by power iteration from a fixed start.
pub(crate) fn gram_spectral_norm(h: &DMatrix<f64>) -> f64 {
    let n = h.ncols();
    let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut estimate = 0.0;
    for _ in 0..100 {
        let w = h.tr_mul(&(h * &v));
        let next = w.norm();
        if next == 0.0 {
            return 0.0;
        }
        v = w / next;
        let converged = (next - estimate).abs() <= 1e-8 * next;
        estimate = next;
        if converged {
            break;
        }
    }
    estimate
}

/// Default Lipschitz constant of the gradient, inflated against power-iteration underestimation.
fn lipschitz(h: &DMatrix<f64>, lambda: f64) -> f64 {
    2.0 * (gram_spectral_norm(h) + lambda) * 1.01
}

fn clip(v: &mut DVector<f64>, bound: f64) {
    v.apply(|x| *x = x.clamp(-bound, bound));
}

fn mapping_norm(x: &DVector<f64>, grad: &DVector<f64>, bound: f64, l: f64) -> f64 {
    let n = x.len() as f64;
    let sq: f64 = x
        .iter()
        .zip(grad.iter())
        .map(|(&xi, &gi)| {
            let d = xi - (xi - gi / l).clamp(-bound, bound);
            d * d
        })
        .sum();
    (sq / n).sqrt()
}

/// `(1/sqrt(n)) ||x - clip(x - grad f(x) / L)||` for the limited-PAPR objective,
/// with `L = 2(sigma_max(H)^2 + lambda)` from power iteration. Zero iff `x` is optimal.
pub fn kkt_residual(x: &DVector<f64>, inst: &ChannelInstance, params: &SystemParams) -> f64 {
    let l = lipschitz(&inst.h, params.lambda);
    let r = &inst.h * x - &inst.s * params.rho.sqrt();
    let grad = (inst.h.tr_mul(&r) + x * params.lambda) * 2.0;
    mapping_norm(x, &grad, params.p_max.sqrt(), l)
}

/// Box-constrained ridge precoder.
///
/// On failure to reach `opts.tol` the best iterate is returned inside
/// [`Error::PrecoderConvergence`].
pub fn limited_papr_precode(inst: &ChannelInstance, params: &SystemParams, opts: SolverOptions) -> Result<PrecoderSolution> {
    limited_papr_traced(inst, params, opts, None)
}

/// The solver behind [`limited_papr_precode`]; optionally records the objective after every iteration.
pub(crate) fn limited_papr_traced(
    inst: &ChannelInstance,
    params: &SystemParams,
    opts: SolverOptions,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<PrecoderSolution> {
    params.validate()?;
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParams(format!("tol must be positive, got {}", opts.tol)));
    }
    let h = &inst.h;
    let lambda = params.lambda;
    let bound = params.p_max.sqrt();
    let b = &inst.s * params.rho.sqrt();

    let mut x = warm_start(inst, params);
    clip(&mut x, bound);

    let mut l = lipschitz(h, lambda);
    let cost = |hx: &DVector<f64>, x: &DVector<f64>| (hx - &b).norm_squared() + lambda * x.norm_squared();
    let gradient = |hx: &DVector<f64>, x: &DVector<f64>| (h.tr_mul(&(hx - &b)) + x * lambda) * 2.0;

    let mut hx = h * &x;
    let mut fx = cost(&hx, &x);
    let mut gx = gradient(&hx, &x);
    let mut residual = mapping_norm(&x, &gx, bound, l);
    let mut x_prev = x.clone();
    let mut hx_prev = hx.clone();
    let mut t = 1.0f64;
    let mut iterations = 0;

    while residual > opts.tol && iterations < opts.max_iter {
        iterations += 1;
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let momentum = (t - 1.0) / t_next;
        // H y is tracked linearly instead of recomputed
        let y = &x + (&x - &x_prev) * momentum;
        let hy = &hx + (&hx - &hx_prev) * momentum;
        let fy = cost(&hy, &y);
        let gy = if momentum == 0.0 { gx.clone() } else { gradient(&hy, &y) };

        let (mut x_new, mut hx_new, mut f_new);
        loop {
            x_new = &y - &gy * (1.0 / l);
            clip(&mut x_new, bound);
            hx_new = h * &x_new;
            f_new = cost(&hx_new, &x_new);
            let step = &x_new - &y;
            let model = fy + gy.dot(&step) + 0.5 * l * step.norm_squared();
            if f_new <= model + 1e-12 * fy.abs().max(1.0) {
                break;
            }
            l *= 2.0;
        }

        if f_new > fx && momentum != 0.0 {
            // function-value restart: drop momentum and take a plain projected step from x.
            // A plain step can only go up by roundoff, so it is always accepted.
            t = 1.0;
            x_prev = x.clone();
            hx_prev = hx.clone();
            continue;
        }

        x_prev = std::mem::replace(&mut x, x_new);
        hx_prev = std::mem::replace(&mut hx, hx_new);
        fx = f_new;
        t = t_next;
        gx = gradient(&hx, &x);
        residual = mapping_norm(&x, &gx, bound, l);
        if let Some(trace) = trace.as_deref_mut() {
            trace.push(fx);
        }
    }

    let solution = PrecoderSolution {
        objective: fx,
        x,
        kkt_residual: residual,
        iterations,
        method: Method::LimitedPapr,
    };
    if residual <= opts.tol {
        Ok(solution)
    } else {
        Err(Error::PrecoderConvergence(Box::new(solution)))
    }
}

fn warm_start(inst: &ChannelInstance, params: &SystemParams) -> DVector<f64> {
    let linear = if params.lambda > 0.0 {
        rzf_precode(inst, params.rho, params.lambda).ok()
    } else if inst.m() > inst.n() {
        zf_precode(inst, params.rho).ok()
    } else {
        None
    };
    linear.map_or_else(|| DVector::zeros(inst.n()), |sol| sol.x)
}

/// `sqrt(rho) (H^T H + lambda I)^{-1} H^T s` via Cholesky.
///
/// `kkt_residual` is `||(H^T H + lambda I) x - sqrt(rho) H^T s|| / sqrt(n)`.
pub fn rzf_precode(inst: &ChannelInstance, rho: f64, lambda: f64) -> Result<PrecoderSolution> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParams(format!("RZF needs a positive finite lambda, got {lambda}")));
    }
    linear_precode(inst, rho, lambda, Method::Rzf)
}

/// Least-squares precoder `sqrt(rho) (H^T H)^{-1} H^T s`; needs `m >= n`.
pub fn zf_precode(inst: &ChannelInstance, rho: f64) -> Result<PrecoderSolution> {
    if inst.m() < inst.n() {
        return Err(Error::Singular);
    }
    linear_precode(inst, rho, 0.0, Method::Zf)
}

fn linear_precode(inst: &ChannelInstance, rho: f64, lambda: f64, method: Method) -> Result<PrecoderSolution> {
    let n = inst.n();
    let mut gram = inst.h.tr_mul(&inst.h);
    for i in 0..n {
        gram[(i, i)] += lambda;
    }
    let rhs = inst.h.tr_mul(&inst.s) * rho.sqrt();
    let chol = gram.clone().cholesky().ok_or(Error::Singular)?;
    let diag = chol.l_dirty().diagonal();
    let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &d| (lo.min(d), hi.max(d)));
    if lo * lo <= 1e-13 * hi * hi {
        return Err(Error::Singular);
    }
    let x = chol.solve(&rhs);
    let kkt = (&gram * &x - &rhs).norm() / (n as f64).sqrt();
    Ok(PrecoderSolution {
        objective: objective(&x, inst, rho, lambda),
        x,
        kkt_residual: kkt,
        iterations: 0,
        method,
    })
}

/// `sqrt(P) sign(H^T s)` with `sign(0) = +1`.
///
/// The objective and `kkt_residual` are those of the limited-PAPR problem at
/// `params`, so the point can be compared against the box-constrained optimum.
pub fn one_bit_precode(inst: &ChannelInstance, params: &SystemParams) -> Result<PrecoderSolution> {
    params.validate()?;
    if !params.p_max.is_finite() {
        return Err(Error::InvalidParams("one-bit precoding needs a finite P".into()));
    }
    let amp = params.p_max.sqrt();
    let x = inst.h.tr_mul(&inst.s).map(|v| if v >= 0.0 { amp } else { -amp });
    Ok(PrecoderSolution {
        objective: objective(&x, inst, params.rho, params.lambda),
        kkt_residual: kkt_residual(&x, inst, params),
        x,
        iterations: 0,
        method: Method::OneBit,
    })
}
