//! Standard-normal density, tail and truncated second moments.
//!
//! Every function takes a standardized threshold `a >= 0` (possibly `+inf`)
//! and returns the exact closed form. `Q` is evaluated through `erfc` so the
//! far tail keeps full relative precision.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Nonnegative standardized truncation point. `+inf` is allowed.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Threshold(f64);

impl Threshold {
    pub const ZERO: Threshold = Threshold(0.0);
    pub const INFINITY: Threshold = Threshold(f64::INFINITY);

    pub fn new(a: f64) -> Result<Self> {
        if a.is_nan() || a < 0.0 {
            return Err(Error::InvalidParams(format!("threshold must be >= 0, got {a}")));
        }
        Ok(Threshold(a))
    }

    /// Callers guarantee `a >= 0`; tiny negative roundoff is clamped.
    pub(crate) fn clamped(a: f64) -> Self {
        debug_assert!(!a.is_nan());
        Threshold(a.max(0.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }
}

pub fn std_normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Upper tail `P[H >= x]` of the standard normal.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// `E[H 1{H >= a}]`.
pub fn upper_m1(a: Threshold) -> f64 {
    if a.is_infinite() {
        return 0.0;
    }
    std_normal_pdf(a.0)
}

/// `E[H^2 1{H >= a}]`.
pub fn upper_m2(a: Threshold) -> f64 {
    if a.is_infinite() {
        return 0.0;
    }
    q_function(a.0) + a.0 * std_normal_pdf(a.0)
}

/// `E[(H - a)^2 1{H >= a}]`, the clipped-tail energy.
pub fn truncated_square_upper(a: Threshold) -> f64 {
    if a.is_infinite() {
        return 0.0;
    }
    let a = a.0;
    ((1.0 + a * a) * q_function(a) - a * std_normal_pdf(a)).max(0.0)
}

/// `E[H^2 1{-a <= H <= a}]`.
pub fn central_square_band(a: Threshold) -> f64 {
    if a.is_infinite() {
        return 1.0;
    }
    1.0 - 2.0 * upper_m2(a)
}
