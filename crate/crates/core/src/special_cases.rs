//! Closed forms for the box-free limits and the four limiting regimes.
//!
//! Each evaluator returns the limit (or the written expansion terms) as is;
//! no remainder is estimated.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::q_function;
use crate::saddle::SystemParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitRegime {
    RzfLimit,
    ZfLimit,
    SmallDelta,
    LargeDelta,
    SmallRho,
    LargeRho,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    pub regime: LimitRegime,
    pub beta_limit: f64,
    pub tau_limit: f64,
    pub pb: f64,
    pub pd: f64,
    pub sinr_lb: f64,
    pub pe: f64,
    pub s_star: Option<f64>,
}

/// Unique positive root of `delta - 1/s - 1/(1 + lambda s) = 0`.
pub fn rzf_s_star(delta: f64, lambda: f64) -> f64 {
    let b = delta - lambda - 1.0;
    let root = (b * b + 4.0 * delta * lambda).sqrt();
    if b > 0.0 {
        // rationalized to avoid cancellation when lambda is small
        2.0 / (root + b)
    } else {
        (root - b) / (2.0 * delta * lambda)
    }
}

/// Coefficients shared by the box-free RZF limit and the small-rho regime.
struct RzfCoefficients {
    s: f64,
    /// `delta - 1/(1 + lambda s)^2`
    gap: f64,
    /// `pb / rho`
    pb_per_rho: f64,
    /// `pd / rho`
    pd_per_rho: f64,
}

impl RzfCoefficients {
    fn new(delta: f64, lambda: f64) -> Self {
        let s = rzf_s_star(delta, lambda);
        let g = (1.0 + lambda * s).powi(2);
        let gap = delta - 1.0 / g;
        RzfCoefficients {
            s,
            gap,
            pb_per_rho: 1.0 / (delta * g - 1.0),
            pd_per_rho: 1.0 / (s * s * delta * gap),
        }
    }

    /// Argument of `Q` in the bit error probability:
    /// `sqrt(rho)(delta s - 1) / sqrt(sigma^2 delta^2 s^2 + pb)`.
    fn pe_argument(&self, params: &SystemParams) -> f64 {
        let SystemParams { delta, rho, sigma2, .. } = *params;
        let s = self.s;
        let den = sigma2 * delta * delta * s * s + rho * self.pb_per_rho;
        rho.sqrt() * (delta * s - 1.0) / den.sqrt()
    }
}

fn require_regularized(params: &SystemParams, what: &str) -> Result<()> {
    params.validate()?;
    if params.lambda > 0.0 {
        Ok(())
    } else {
        Err(Error::Infeasible(format!("{what} requires lambda > 0")))
    }
}

fn require_noise(params: &SystemParams, what: &str) -> Result<()> {
    if params.sigma2 > 0.0 {
        Ok(())
    } else {
        Err(Error::Degenerate(format!("{what} divides by sigma; sigma must be positive")))
    }
}

/// `P -> inf` with `lambda > 0`.
pub fn rzf_limit(params: &SystemParams) -> Result<LimitReport> {
    require_regularized(params, "the RZF limit")?;
    let SystemParams { delta, rho, lambda, sigma2, .. } = *params;
    let c = RzfCoefficients::new(delta, lambda);
    let tau = rho.sqrt() / c.gap.sqrt();
    let beta = 2.0 * rho.sqrt() / (c.s * c.gap.sqrt());
    let k = c.s * c.s * delta * c.gap;
    Ok(LimitReport {
        regime: LimitRegime::RzfLimit,
        beta_limit: beta,
        tau_limit: tau,
        pb: rho * c.pb_per_rho,
        pd: rho * c.pd_per_rho,
        sinr_lb: k / (1.0 + sigma2 / rho * k),
        pe: q_function(c.pe_argument(params)),
        s_star: Some(c.s),
    })
}

/// `P -> inf` with `lambda = 0`, `delta > 1`. The value of `lambda` is ignored.
pub fn zf_limit(params: &SystemParams) -> Result<LimitReport> {
    params.validate()?;
    let SystemParams { delta, rho, sigma2, .. } = *params;
    if delta <= 1.0 {
        return Err(Error::Infeasible(format!("the ZF limit requires delta > 1, got {delta}")));
    }
    let pd = rho * (1.0 - 1.0 / delta);
    Ok(LimitReport {
        regime: LimitRegime::ZfLimit,
        beta_limit: 2.0 * (rho * (delta - 1.0)).sqrt(),
        tau_limit: (rho / (delta - 1.0)).sqrt(),
        pb: rho / (delta - 1.0),
        pd,
        sinr_lb: rho / (pd + sigma2),
        pe: q_function(rho.sqrt() / (rho * (delta - 1.0) + sigma2 * delta * delta).sqrt()),
        s_star: None,
    })
}

/// `delta -> 0` with `lambda > 0`. `tau_limit` and `beta_limit` are the
/// leading-order equivalents at the given `delta`.
pub fn small_delta_limit(params: &SystemParams) -> Result<LimitReport> {
    require_regularized(params, "the small-delta limit")?;
    require_noise(params, "the small-delta bit error probability")?;
    let SystemParams { delta, rho, lambda, sigma2, .. } = *params;
    let shrink = 1.0 + 1.0 / lambda;
    let pd = rho / (shrink * shrink);
    Ok(LimitReport {
        regime: LimitRegime::SmallDelta,
        beta_limit: 2.0 * (rho * delta).sqrt() / shrink,
        tau_limit: (rho / delta).sqrt(),
        pb: 0.0,
        pd,
        sinr_lb: rho / (pd + sigma2),
        pe: q_function(rho.sqrt() / ((lambda + 1.0) * sigma2.sqrt())),
        s_star: None,
    })
}

/// `delta -> inf`; independent of `lambda` and `P`.
pub fn large_delta_limit(params: &SystemParams) -> Result<LimitReport> {
    params.validate()?;
    let SystemParams { delta, rho, sigma2, .. } = *params;
    Ok(LimitReport {
        regime: LimitRegime::LargeDelta,
        beta_limit: 2.0 * (rho * delta).sqrt(),
        tau_limit: (rho / delta).sqrt(),
        pb: 0.0,
        pd: rho,
        sinr_lb: rho / (rho + sigma2),
        pe: 0.5,
        s_star: None,
    })
}

/// `rho -> 0`: leading-order equivalents of every metric at the given `rho`.
///
/// `pe` is the first-order expansion around 1/2 and is not clamped.
pub fn small_rho_limit(params: &SystemParams) -> Result<LimitReport> {
    params.validate()?;
    let SystemParams { delta, rho, lambda, sigma2, .. } = *params;
    if lambda == 0.0 && delta <= 1.0 {
        return Err(Error::Infeasible(format!(
            "the small-rho limit with lambda = 0 requires delta > 1, got {delta}"
        )));
    }
    require_noise(params, "the small-rho regime")?;
    let sinr_lb = rho / sigma2;
    let inv_sqrt_2pi = 1.0 / (2.0 * PI).sqrt();
    if lambda > 0.0 {
        let c = RzfCoefficients::new(delta, lambda);
        Ok(LimitReport {
            regime: LimitRegime::SmallRho,
            beta_limit: 2.0 * rho.sqrt() / (c.s * c.gap.sqrt()),
            tau_limit: rho.sqrt() / c.gap.sqrt(),
            pb: rho * c.pb_per_rho,
            pd: rho * c.pd_per_rho,
            sinr_lb,
            pe: 0.5 - inv_sqrt_2pi * c.pe_argument(params),
            s_star: Some(c.s),
        })
    } else {
        Ok(LimitReport {
            regime: LimitRegime::SmallRho,
            beta_limit: 2.0 * rho.sqrt() * (delta - 1.0).sqrt(),
            tau_limit: rho.sqrt() / (delta - 1.0).sqrt(),
            pb: rho / (delta - 1.0),
            pd: rho * (delta - 1.0) / delta,
            sinr_lb,
            pe: 0.5
                - inv_sqrt_2pi * rho.sqrt() / (rho * (delta - 1.0) + sigma2 * delta * delta).sqrt(),
            s_star: None,
        })
    }
}

/// `rho -> inf`: the leading and first-order terms of each expansion.
///
/// The constant term of the distortion-power expansion is unknown and omitted.
pub fn large_rho_expansion(params: &SystemParams) -> Result<LimitReport> {
    params.validate()?;
    let SystemParams { delta, rho, p_max, sigma2, .. } = *params;
    if !p_max.is_finite() {
        return Err(Error::InvalidParams("the large-rho expansion needs a finite P".into()));
    }
    let lift = (2.0 * p_max / (PI * delta)).sqrt();
    Ok(LimitReport {
        regime: LimitRegime::LargeRho,
        beta_limit: 2.0 * (rho * delta).sqrt() - 2.0 * (2.0 * p_max / PI).sqrt(),
        tau_limit: (rho / delta).sqrt() + p_max / (2.0 * (delta * rho).sqrt()),
        pb: p_max,
        pd: rho - 2.0 * lift * rho.sqrt(),
        sinr_lb: 1.0 + 2.0 * lift / rho.sqrt(),
        pe: q_function((2.0 * p_max / (PI * delta * (p_max + sigma2))).sqrt()),
        s_star: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymptotics::full_report;
    use crate::saddle::solve_saddle;

    fn params(delta: f64, rho: f64, lambda: f64, p_max: f64, sigma: f64) -> SystemParams {
        SystemParams::with_sigma(delta, rho, lambda, p_max, sigma).unwrap()
    }

    fn defining_residual(delta: f64, lambda: f64, s: f64) -> f64 {
        delta - 1.0 / s - 1.0 / (1.0 + lambda * s)
    }

    #[test]
    fn s_star_reference_value() {
        // bisection oracle on delta - 1/s - 1/(1+s) = 0 at delta = 2
        let (mut lo, mut hi) = (0.1f64, 10.0f64);
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if defining_residual(2.0, 1.0, m) < 0.0 { lo = m } else { hi = m }
        }
        let s = rzf_s_star(2.0, 1.0);
        assert!((s - lo).abs() < 1e-14);
        assert!((s - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn s_star_small_lambda() {
        for delta in [1.5, 2.0, 4.0] {
            assert!((rzf_s_star(delta, 1e-12) - 1.0 / (delta - 1.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn s_star_residual_on_log_grid() {
        for i in 0..20 {
            for j in 0..20 {
                let delta = 10f64.powf(-2.0 + 4.0 * i as f64 / 19.0);
                let lambda = 10f64.powf(-3.0 + 5.0 * j as f64 / 19.0);
                let s = rzf_s_star(delta, lambda);
                assert!(s > 0.0);
                let r = defining_residual(delta, lambda, s);
                assert!(r.abs() < 1e-12, "delta {delta} lambda {lambda}: {r:e}");
            }
        }
    }

    #[test]
    fn rzf_reference_values() {
        let r = rzf_limit(&params(2.0, 1.0, 1.0, 1.0, 0.1)).unwrap();
        assert!((r.tau_limit - 0.77689).abs() < 1e-5);
        assert!((r.beta_limit - 2.19737).abs() < 1e-5);
        assert!((r.pb - 0.20711).abs() < 1e-5);
        assert!((r.pd - 0.60355).abs() < 1e-5);
        assert!((r.pb - (2.0 * r.tau_limit * r.tau_limit - 1.0)).abs() < 1e-12);
        assert!((r.sinr_lb - 1.0 / (r.pd + 0.01)).abs() < 1e-12);
        assert_eq!(r.s_star, Some(rzf_s_star(2.0, 1.0)));
    }

    #[test]
    fn rzf_pe_agrees_with_generic_formula() {
        let p = params(2.0, 1.0, 1.0, f64::INFINITY, 0.1);
        let lim = rzf_limit(&p).unwrap();
        let generic = full_report(&p).unwrap();
        assert!((lim.pe - generic.pe_star).abs() < 1e-10);
        assert!((lim.sinr_lb - generic.sinr_lb_star).abs() < 1e-10);
    }

    #[test]
    fn rzf_continuous_into_zf() {
        let rzf = rzf_limit(&params(2.0, 1.0, 1e-9, 1.0, 0.1)).unwrap();
        let zf = zf_limit(&params(2.0, 1.0, 0.0, 1.0, 0.1)).unwrap();
        for (a, b) in [(rzf.pb, zf.pb), (rzf.pd, zf.pd), (rzf.pe, zf.pe), (rzf.tau_limit, zf.tau_limit), (rzf.beta_limit, zf.beta_limit)] {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn zf_reference_values() {
        let r = zf_limit(&params(2.0, 1.0, 0.0, 1.0, 0.1)).unwrap();
        assert_eq!((r.tau_limit, r.beta_limit, r.pb, r.pd), (1.0, 2.0, 1.0, 0.5));
        assert!((r.sinr_lb - 1.960_78).abs() < 1e-5);
        assert!((r.pe - 0.163_39).abs() < 1e-5);
        assert!(zf_limit(&params(1.0, 1.0, 0.0, 1.0, 0.1)).is_err());
        let near = zf_limit(&params(1.0 + 1e-9, 1.0, 0.0, 1.0, 0.1)).unwrap();
        assert!(near.pb > 1e8);
        let doubled = zf_limit(&params(3.0, 2.0, 0.0, 1.0, 0.1)).unwrap();
        let single = zf_limit(&params(3.0, 1.0, 0.0, 1.0, 0.1)).unwrap();
        assert!((doubled.pb - 2.0 * single.pb).abs() < 1e-15);
    }

    #[test]
    fn small_delta_reference() {
        let r = small_delta_limit(&params(1e-3, 1.0, 1.0, 1.0, 0.1)).unwrap();
        assert_eq!(r.pb, 0.0);
        assert!((r.pd - 0.25).abs() < 1e-15);
        assert!((r.sinr_lb - 1.0 / 0.26).abs() < 1e-12);
        assert!((r.pe / 2.866_515_718_791_9e-7 - 1.0).abs() < 1e-9);
        let big_lambda = small_delta_limit(&params(1e-3, 1.0, 1e9, 1.0, 0.1)).unwrap();
        assert!((big_lambda.pd - 1.0).abs() < 1e-8);
        assert!(matches!(small_delta_limit(&params(1e-3, 1.0, 1.0, 1.0, 0.0)), Err(Error::Degenerate(_))));
        assert!(matches!(small_delta_limit(&params(1e-3, 1.0, 0.0, 1.0, 0.1)), Err(Error::Infeasible(_))));
    }

    #[test]
    fn large_delta_reference() {
        let a = large_delta_limit(&params(100.0, 1.0, 0.0, 1.0, 0.1)).unwrap();
        let b = large_delta_limit(&params(100.0, 1.0, 3.0, 50.0, 0.1)).unwrap();
        assert!((a.sinr_lb - 0.990_099).abs() < 1e-6);
        assert_eq!(a.pe, 0.5);
        assert_eq!((a.pb, a.pd, a.sinr_lb, a.pe), (b.pb, b.pd, b.sinr_lb, b.pe));
    }

    #[test]
    fn small_rho_branches() {
        let p = params(2.0, 1e-6, 1.0, 1.0, 0.1);
        let lim = small_rho_limit(&p).unwrap();
        let rzf = rzf_limit(&p).unwrap();
        assert_eq!(lim.s_star, rzf.s_star);
        assert!((lim.pb - rzf.pb).abs() < 1e-20);
        let sp = solve_saddle(&p).unwrap();
        let pb = p.delta * sp.tau_star.powi(2) - p.rho;
        assert!((pb / lim.pb - 1.0).abs() < 0.01);
        assert!((lim.sinr_lb / (p.rho / p.sigma2) - 1.0).abs() < 1e-15);

        let zf_branch = small_rho_limit(&params(2.0, 1e-6, 0.0, 1.0, 0.1)).unwrap();
        assert!((zf_branch.pb - 1e-6).abs() < 1e-20);
        assert!(zf_branch.s_star.is_none());
        assert!(matches!(small_rho_limit(&params(0.5, 1e-6, 0.0, 1.0, 0.1)), Err(Error::Infeasible(_))));
    }

    #[test]
    fn large_rho_reference() {
        let p = params(1.2, 1e6, 0.01, 25.0, 0.1);
        let r = large_rho_expansion(&p).unwrap();
        assert_eq!(r.pb, 25.0);
        assert!((r.pe - 0.2332).abs() < 1e-4);
        let sp = solve_saddle(&p).unwrap();
        assert!((sp.tau_star - r.tau_limit).abs() < 1e-3);
    }

    #[test]
    fn approaches_rzf_limit_in_power() {
        let lim = rzf_limit(&params(2.0, 1.0, 1.0, 1.0, 0.1)).unwrap();
        let mut last = f64::INFINITY;
        for pm in [1e3, 1e4, 1e5] {
            let rep = full_report(&params(2.0, 1.0, 1.0, pm, 0.1)).unwrap();
            let err = (rep.pb_star - lim.pb).abs() + (rep.pd_star - lim.pd).abs() + (rep.pe_star - lim.pe).abs();
            assert!(err <= last);
            last = err;
            if pm == 1e5 {
                assert!((rep.pb_star / lim.pb - 1.0).abs() < 1e-3);
                assert!((rep.pd_star / lim.pd - 1.0).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn limiting_regimes_on_delta() {
        for delta in [1e-2, 1e-3] {
            let p = params(delta, 1.0, 1.0, 1.0, 0.1);
            let rep = full_report(&p).unwrap();
            let lim = small_delta_limit(&p).unwrap();
            assert!((rep.pd_star / lim.pd - 1.0).abs() < 0.02);
        }
        for delta in [50.0, 200.0] {
            let p = params(delta, 1.0, 0.01, 1.0, 0.1);
            let rep = full_report(&p).unwrap();
            let lim = large_delta_limit(&p).unwrap();
            assert!((rep.pd_star / lim.pd - 1.0).abs() < 0.02);
            // the box is inactive, so pd* = rho (1 - 1/delta) up to clipping and
            // sinr_lb* sits a relative ~1/delta above the limit
            let offset = 1.0 / (1.0 - 1.0 / delta + 0.01) * (1.0 + 0.01) - 1.0;
            assert!((rep.sinr_lb_star / lim.sinr_lb - 1.0 - offset).abs() < 1e-3);
        }
        let p = params(200.0, 1.0, 0.01, 1.0, 0.1);
        let rep = full_report(&p).unwrap();
        assert!((rep.sinr_lb_star / large_delta_limit(&p).unwrap().sinr_lb - 1.0).abs() < 0.02);
    }
}
