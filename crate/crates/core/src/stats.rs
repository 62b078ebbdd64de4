//! Order-stable reductions and one-dimensional distribution distances.

const PAIRWISE_BLOCK: usize = 8;

/// Pairwise (cascade) summation.
///
/// The split points depend only on the slice length, so the same values in
/// the same order always give the same bits.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= PAIRWISE_BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

pub fn mean(values: &[f64]) -> f64 {
    pairwise_sum(values) / values.len() as f64
}

/// Unbiased sample standard deviation (two-pass).
pub fn sample_std(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(values);
    let sq: Vec<f64> = values.iter().map(|v| (v - m) * (v - m)).collect();
    (pairwise_sum(&sq) / (n - 1) as f64).sqrt()
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Exact 2-Wasserstein distance between two empirical measures on the line.
///
/// Both quantile functions are step functions; the integral of their squared
/// difference over `(0, 1)` is accumulated over the merged breakpoints, so the
/// sample sizes may differ.
pub fn wasserstein2(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty());
    let a = sorted(a);
    let b = sorted(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut level = 0.0_f64;
    let mut terms = Vec::with_capacity(a.len() + b.len());
    while i < a.len() && j < b.len() {
        let next_a = (i + 1) as f64 / na;
        let next_b = (j + 1) as f64 / nb;
        let next = next_a.min(next_b);
        let d = a[i] - b[j];
        terms.push((next - level) * d * d);
        level = next;
        // advance both on ties, which is exact for equal sizes
        if next_a <= next {
            i += 1;
        }
        if next_b <= next {
            j += 1;
        }
    }
    pairwise_sum(&terms).max(0.0).sqrt()
}

/// One-sample Kolmogorov-Smirnov statistic `sup |F_n - F|` for a continuous `cdf`.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let s = sorted(sample);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// KS statistic against a point mass at `atom`.
pub fn ks_statistic_point_mass(sample: &[f64], atom: f64) -> f64 {
    let n = sample.len() as f64;
    let below = sample.iter().filter(|&&x| x < atom).count() as f64 / n;
    let at_or_below = sample.iter().filter(|&&x| x <= atom).count() as f64 / n;
    // sup over x < atom is F_n(atom-) ; sup over x >= atom is 1 - F_n(atom)
    below.max(1.0 - at_or_below)
}

/// Asymptotic Kolmogorov critical value at the 1% level.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.63 / (n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::q_function;

    #[test]
    fn pairwise_matches_naive_on_small_input() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(pairwise_sum(&v), 5050.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn std_of_constant_is_zero() {
        assert_eq!(sample_std(&[2.5, 2.5, 2.5]), 0.0);
        assert!((sample_std(&[1.0, 3.0]) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn w2_identical_and_shifted() {
        let a = [0.3, -1.2, 2.0, 0.0];
        assert_eq!(wasserstein2(&a, &a), 0.0);
        let shifted: Vec<f64> = a.iter().map(|v| v + 0.7).collect();
        assert!((wasserstein2(&a, &shifted) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn w2_unequal_sizes() {
        // {0, 1} vs {0, 0, 1, 1}: same measure
        assert!(wasserstein2(&[0.0, 1.0], &[0.0, 0.0, 1.0, 1.0]) < 1e-15);
        // {0} vs {0, 1}: half the mass moves by 1
        assert!((wasserstein2(&[0.0], &[0.0, 1.0]) - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn ks_uniform_grid() {
        let sample: Vec<f64> = (0..10).map(|i| (i as f64 + 0.5) / 10.0).collect();
        let d = ks_statistic(&sample, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.05).abs() < 1e-12);
        let gauss = ks_statistic(&[0.0], |x| 1.0 - q_function(x));
        assert!((gauss - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ks_point_mass() {
        assert_eq!(ks_statistic_point_mass(&[1.0, 1.0, 1.0], 1.0), 0.0);
        assert!((ks_statistic_point_mass(&[0.0, 1.0, 1.0, 2.0], 1.0) - 0.25).abs() < 1e-15);
    }
}
