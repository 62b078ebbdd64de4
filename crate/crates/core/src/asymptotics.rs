//! Large-system metrics derived from the saddle point.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::q_function;
use crate::quadrature::adaptive_simpson;
use crate::saddle::{solve_saddle, SaddlePoint, SystemParams};

const POWER_CLAMP: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticReport {
    pub saddle: SaddlePoint,
    pub pb_star: f64,
    pub pd_star: f64,
    pub sinr_lb_star: f64,
    /// `+inf` when `sigma2 = 0` and the distortion law has a Gaussian part.
    pub sinr_up_star: f64,
    pub pe_star: f64,
    pub distortion_std: f64,
    pub distortion_mean_mag: f64,
}

/// Limiting law of one distortion entry conditioned on the user's symbol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionLaw {
    pub mean_given_s_plus: f64,
    pub mean_given_s_minus: f64,
    pub std: f64,
}

impl DistortionLaw {
    pub fn mean_given(&self, s: f64) -> f64 {
        if s >= 0.0 {
            self.mean_given_s_plus
        } else {
            self.mean_given_s_minus
        }
    }

    /// `E[e^2]` under the law.
    pub fn second_moment(&self) -> f64 {
        0.5 * (self.mean_given_s_plus.powi(2) + self.mean_given_s_minus.powi(2)) + self.std * self.std
    }
}

/// `delta tau*^2 - rho`.
pub fn per_antenna_power(sp: &SaddlePoint, params: &SystemParams) -> Result<f64> {
    let raw = sp.raw_power(params);
    if raw < -POWER_CLAMP {
        return Err(Error::NegativePower(raw));
    }
    Ok(raw.max(0.0))
}

/// `beta*^2 / (4 delta)`.
pub fn distortion_power(sp: &SaddlePoint, params: &SystemParams) -> f64 {
    let pd = sp.beta_star * sp.beta_star / (4.0 * params.delta);
    debug_assert!(pd <= params.rho * (1.0 + 1e-9) + 1e-9, "pd = {pd} exceeds rho = {}", params.rho);
    pd
}

pub fn sinr_lb(sp: &SaddlePoint, params: &SystemParams) -> f64 {
    params.rho / (distortion_power(sp, params) + params.sigma2)
}

/// `(coefficient of H, coefficient of S)` of the limiting distortion,
/// `e = c_h H - c_s S`.
fn distortion_coefficients(sp: &SaddlePoint, params: &SystemParams) -> Result<(f64, f64)> {
    let pb = per_antenna_power(sp, params)?;
    let scale = sp.beta_star / (2.0 * sp.tau_star * params.delta);
    Ok((scale * pb.sqrt(), scale * params.rho.sqrt()))
}

/// `E[rho / (e^2 + sigma^2)]` under the limiting distortion law.
///
/// The symbol average collapses by `H -> -H`, leaving a one-dimensional
/// Gaussian integral; it is evaluated by adaptive Simpson with the peak of
/// the integrand as a breakpoint.
pub fn sinr_up(sp: &SaddlePoint, params: &SystemParams) -> Result<f64> {
    let (ch, cs) = distortion_coefficients(sp, params)?;
    let rho = params.rho;
    let s2 = params.sigma2;
    if ch == 0.0 {
        return Ok(rho / (cs * cs + s2));
    }
    if s2 == 0.0 {
        return Ok(f64::INFINITY);
    }
    let integrand = |h: f64| {
        let e = ch * h - cs;
        rho / (e * e + s2) * crate::gaussian::std_normal_pdf(h)
    };
    let peak = cs / ch;
    let (lo, hi) = (-14.0, 14.0);
    let tol = 1e-12 * (rho / s2).max(1.0);
    let mut total = 0.0;
    let mut edges = vec![lo];
    if peak > lo && peak < hi {
        edges.push(peak);
    }
    edges.push(hi);
    for w in edges.windows(2) {
        total += adaptive_simpson(&integrand, w[0], w[1], tol, 50)?;
    }
    Ok(total)
}

/// Limiting bit error probability of BPSK detection by sign.
pub fn bit_error_probability(sp: &SaddlePoint, params: &SystemParams) -> Result<f64> {
    let (ch, cs) = distortion_coefficients(sp, params)?;
    let variance = ch * ch + params.sigma2;
    if variance == 0.0 {
        return Err(Error::Degenerate(
            "bit error probability needs sigma > 0 or a Gaussian distortion component".into(),
        ));
    }
    Ok(q_function((params.rho.sqrt() - cs) / variance.sqrt()))
}

/// Clipping map whose image of `H ~ N(0,1)` is the limiting law of the precoded entries.
pub fn theta_map(gamma: f64, sp: &SaddlePoint, params: &SystemParams) -> f64 {
    let cap = params.p_max.sqrt();
    (gamma / sp.alpha_star).clamp(-cap, cap)
}

pub fn distortion_law(sp: &SaddlePoint, params: &SystemParams) -> Result<DistortionLaw> {
    let (ch, cs) = distortion_coefficients(sp, params)?;
    Ok(DistortionLaw {
        mean_given_s_plus: -cs,
        mean_given_s_minus: cs,
        std: ch,
    })
}

/// Solves the saddle point and evaluates every metric.
pub fn full_report(params: &SystemParams) -> Result<AsymptoticReport> {
    let sp = solve_saddle(params)?;
    report_for(&sp, params)
}

/// Evaluates every metric at a given saddle point.
pub fn report_for(sp: &SaddlePoint, params: &SystemParams) -> Result<AsymptoticReport> {
    let law = distortion_law(sp, params)?;
    Ok(AsymptoticReport {
        saddle: *sp,
        pb_star: per_antenna_power(sp, params)?,
        pd_star: distortion_power(sp, params),
        sinr_lb_star: sinr_lb(sp, params),
        sinr_up_star: sinr_up(sp, params)?,
        pe_star: bit_error_probability(sp, params)?,
        distortion_std: law.std,
        distortion_mean_mag: law.mean_given_s_plus.abs(),
    })
}
