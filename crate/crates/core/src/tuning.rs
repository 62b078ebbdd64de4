//! Inverts the per-antenna power map `rho -> pb*(rho)`.

use serde::{Deserialize, Serialize};

use crate::asymptotics::per_antenna_power;
use crate::error::{Error, Result};
use crate::saddle::{solve_saddle, SystemParams};

pub const DEFAULT_TOL: f64 = 1e-6;
const GROWTH: f64 = 4.0;
const PROBE_POINTS: usize = 10;
const MAX_GROWTH_STEPS: usize = 100;
const MAX_BISECTIONS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub rho: f64,
    pub achieved_pb: f64,
    /// Bisection steps after bracketing.
    pub iterations: usize,
    /// Final bracket `(lo, hi)` on `rho`.
    pub bracket: (f64, f64),
}

/// `pb*` at the given `rho`, other parameters fixed.
pub fn pb_at(params: &SystemParams, rho: f64) -> Result<f64> {
    let p = params.with_rho(rho);
    let sp = solve_saddle(&p)?;
    per_antenna_power(&sp, &p)
}

/// Finds `rho` with `|pb*(rho) - target| <= tol`; `params.rho` is ignored.
///
/// The map is assumed increasing. A 10-point probe of the bracket checks this
/// before bisecting and fails with [`Error::NonMonotone`] otherwise.
pub fn rho_for_target_pb(target: f64, params: &SystemParams, tol: f64) -> Result<TuneResult> {
    params.validate()?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParams(format!("tol must be positive, got {tol}")));
    }
    if !(target > 0.0) || target >= params.p_max {
        return Err(Error::TargetUnreachable { target, p_max: params.p_max });
    }
    let pb = |rho: f64| pb_at(params, rho);

    let (mut lo, mut hi) = (1e-6, 1.0);
    let (mut pb_lo, mut pb_hi) = (pb(lo)?, pb(hi)?);
    let mut steps = 0;
    while pb_lo > target {
        (hi, pb_hi) = (lo, pb_lo);
        lo /= GROWTH;
        pb_lo = pb(lo)?;
        steps += 1;
        if steps > MAX_GROWTH_STEPS {
            return Err(Error::TargetUnreachable { target, p_max: params.p_max });
        }
    }
    while pb_hi < target {
        (lo, pb_lo) = (hi, pb_hi);
        hi *= GROWTH;
        pb_hi = pb(hi)?;
        steps += 1;
        if steps > MAX_GROWTH_STEPS {
            return Err(Error::TargetUnreachable { target, p_max: params.p_max });
        }
    }

    let mut previous = pb_lo;
    for i in 1..PROBE_POINTS {
        let rho = lo * (hi / lo).powf(i as f64 / (PROBE_POINTS - 1) as f64);
        let value = if i == PROBE_POINTS - 1 { pb_hi } else { pb(rho)? };
        if value <= previous {
            return Err(Error::NonMonotone { rho });
        }
        previous = value;
    }

    let mut iterations = 0;
    loop {
        if (pb_lo - target).abs() <= tol {
            return Ok(TuneResult { rho: lo, achieved_pb: pb_lo, iterations, bracket: (lo, hi) });
        }
        if (pb_hi - target).abs() <= tol {
            return Ok(TuneResult { rho: hi, achieved_pb: pb_hi, iterations, bracket: (lo, hi) });
        }
        if iterations >= MAX_BISECTIONS || hi - lo <= 4.0 * f64::EPSILON * hi {
            return Err(Error::Convergence {
                what: "rho tuning",
                iterations,
                residual: (pb_lo - target).abs().min((pb_hi - target).abs()),
            });
        }
        iterations += 1;
        let mid = (lo * hi).sqrt();
        let pb_mid = pb(mid)?;
        if pb_mid < target {
            (lo, pb_lo) = (mid, pb_mid);
        } else {
            (hi, pb_hi) = (mid, pb_mid);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverts_zf_regime() {
        let p = SystemParams::with_sigma(2.0, 1.0, 0.0, 100.0, 0.1).unwrap();
        let r = rho_for_target_pb(1.0, &p, 1e-9).unwrap();
        // pb ~ rho/(delta-1) with a tiny clipping correction at P = 100
        assert!((r.rho - 1.0).abs() < 1e-6, "{}", r.rho);
        assert!((r.achieved_pb - 1.0).abs() <= 1e-9);
        assert!(r.bracket.0 <= r.rho && r.rho <= r.bracket.1);
    }

    #[test]
    fn small_targets_give_small_rho() {
        let p = SystemParams::with_sigma(1.2, 1.0, 0.02, 50.0, 0.1).unwrap();
        let a = rho_for_target_pb(1e-3, &p, 1e-9).unwrap();
        let b = rho_for_target_pb(1e-5, &p, 1e-11).unwrap();
        assert!(b.rho < a.rho && b.rho < 1e-3);
    }

    #[test]
    fn round_trip_near_cap() {
        let p = SystemParams::with_sigma(1.2, 1.0, 0.02, 50.0, 0.1).unwrap();
        let r = rho_for_target_pb(45.0, &p, DEFAULT_TOL).unwrap();
        assert!((pb_at(&p, r.rho).unwrap() - 45.0).abs() <= DEFAULT_TOL);
    }

    #[test]
    fn unreachable_targets() {
        let p = SystemParams::with_sigma(1.2, 1.0, 0.02, 50.0, 0.1).unwrap();
        assert!(matches!(rho_for_target_pb(50.0, &p, 1e-6), Err(Error::TargetUnreachable { .. })));
        assert!(matches!(rho_for_target_pb(0.0, &p, 1e-6), Err(Error::TargetUnreachable { .. })));
    }
}
