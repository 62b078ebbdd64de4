//! Slow, independent solvers used to check the fast ones.
//!
//! Neither routine shares code with the production solvers beyond the
//! objective definitions.

use nalgebra::DVector;

use crate::precoder::ChannelInstance;
use crate::saddle::{objective_d, SystemParams};

const GRID: usize = 400;
const INVPHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section minimization of a unimodal `f` on `[lo, hi]`.
pub fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, rel_tol: f64) -> (f64, f64) {
    let mut c = hi - INVPHI * (hi - lo);
    let mut d = lo + INVPHI * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..400 {
        if hi - lo <= rel_tol * (lo.abs() + hi.abs()).max(1e-300) {
            break;
        }
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INVPHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INVPHI * (hi - lo);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Grid scan then golden refinement; the range is widened while the grid
/// minimum sits on an edge.
fn scan_then_refine(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, log_scale: bool) -> (f64, f64) {
    for _ in 0..40 {
        let point = |i: usize| {
            let u = i as f64 / (GRID - 1) as f64;
            if log_scale {
                lo * (hi / lo).powf(u)
            } else {
                lo + (hi - lo) * u
            }
        };
        let (best, _) = (0..GRID)
            .map(|i| (i, f(point(i))))
            .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
        if best == 0 && log_scale {
            lo /= 8.0;
            continue;
        }
        if best == GRID - 1 {
            hi *= 8.0;
            continue;
        }
        let a = point(best.saturating_sub(1));
        let b = point(best + 1);
        return golden_min(f, a, b, 1e-13);
    }
    (f64::NAN, f64::NAN)
}

/// Brute-force saddle point `(beta*, tau*)` of the scalar max-min problem.
pub fn grid_saddle(params: &SystemParams) -> (f64, f64) {
    let tau_floor = (params.rho / params.delta).sqrt();
    let tau_hi = if params.p_max.is_finite() {
        2.0 * ((params.rho + params.p_max) / params.delta).sqrt()
    } else {
        4.0 * tau_floor
    };
    let inner = |beta: f64| scan_then_refine(&|tau| objective_d(beta, tau, params), 0.5 * tau_floor, tau_hi, true);
    let beta_hi = 2.0 * (params.rho * params.delta).sqrt() * 1.01;
    let (beta, _) = scan_then_refine(&|beta| -inner(beta).1, beta_hi * 1e-6, beta_hi, false);
    (beta, inner(beta).0)
}

/// Cyclic coordinate descent on the box-constrained ridge problem, run until the
/// gradient-mapping norm (with step `1/L`, `L = 2(||H||_F^2 + lambda)`) is below `tol`.
pub fn box_qp_coordinate_descent(inst: &ChannelInstance, params: &SystemParams, tol: f64, max_sweeps: usize) -> DVector<f64> {
    let h = &inst.h;
    let n = h.ncols();
    let bound = params.p_max.sqrt();
    let lambda = params.lambda;
    let b = &inst.s * params.rho.sqrt();
    let col_sq: Vec<f64> = (0..n).map(|j| h.column(j).norm_squared()).collect();
    let l = 2.0 * (h.norm_squared() + lambda);
    let mut x = DVector::zeros(n);
    let mut r = -b.clone(); // r = H x - b
    for _ in 0..max_sweeps {
        for j in 0..n {
            let hj = h.column(j);
            let denom = col_sq[j] + lambda;
            if denom == 0.0 {
                continue;
            }
            let old = x[j];
            let target: f64 = (col_sq[j] * old - hj.dot(&r)) / denom;
            let new = target.clamp(-bound, bound);
            if new != old {
                r.axpy(new - old, &hj, 1.0);
                x[j] = new;
            }
        }
        let grad = (h.tr_mul(&r) + &x * lambda) * 2.0;
        let sq: f64 = x
            .iter()
            .zip(grad.iter())
            .map(|(&xi, &gi)| (xi - (xi - gi / l).clamp(-bound, bound)).powi(2))
            .sum();
        if (sq / n as f64).sqrt() <= tol {
            break;
        }
    }
    x
}
