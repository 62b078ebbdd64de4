//! One-dimensional quadrature: adaptive Simpson and Gauss-Hermite.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};

/// Adaptive Simpson integration of `f` over `[lo, hi]` to absolute tolerance `tol`.
///
/// Fails with [`Error::Quadrature`] when a subinterval still misses its
/// tolerance share at `max_depth`.
pub fn adaptive_simpson<F: Fn(f64) -> f64 + ?Sized>(
    f: &F,
    lo: f64,
    hi: f64,
    tol: f64,
    max_depth: u32,
) -> Result<f64> {
    if lo == hi {
        return Ok(0.0);
    }
    let fa = f(lo);
    let fb = f(hi);
    let mid = 0.5 * (lo + hi);
    let fm = f(mid);
    let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(f, lo, hi, fa, fm, fb, whole, tol, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64 + ?Sized>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Quadrature(format!(
            "adaptive Simpson exhausted its depth on [{a:.6e}, {b:.6e}] (error estimate {:.3e})",
            delta.abs() / 15.0
        )));
    }
    let l = recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let r = recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Ok(l + r)
}

/// Gauss-Hermite rule for `E[g(H)]`, `H ~ N(0, 1)`.
///
/// Built by Golub-Welsch: the nodes are the eigenvalues of the Jacobi matrix of
/// the probabilists' Hermite recurrence and the weights are the squared first
/// components of its eigenvectors.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1);
        let jacobi = DMatrix::from_fn(order, order, |i, j| {
            if i + 1 == j || j + 1 == i {
                (i.max(j) as f64).sqrt()
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(jacobi);
        let mut rule: Vec<(f64, f64)> = eig
            .eigenvalues
            .iter()
            .zip(eig.eigenvectors.row(0).iter())
            .map(|(&x, &v)| (x, v * v))
            .collect();
        rule.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (nodes, weights) = rule.into_iter().unzip();
        GaussHermite { nodes, weights }
    }

    pub fn expect(&self, g: impl Fn(f64) -> f64) -> f64 {
        let terms: Vec<f64> = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * g(x))
            .collect();
        crate::stats::pairwise_sum(&terms)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}
