//! Random channel realizations, empirical metrics, and distributional checks
//! against the limiting laws.
//!
//! Every random draw comes from a ChaCha8 stream keyed by the trial seed, so a
//! trial is reproducible bit for bit regardless of which thread runs it.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{distortion_law, full_report, theta_map, AsymptoticReport, DistortionLaw};
use crate::error::{Error, Result};
use crate::gaussian::q_function;
use crate::precoder::{precode, ChannelInstance, Method, SolverOptions};
use crate::saddle::{SaddlePoint, SystemParams};
use crate::stats::{ks_critical_1pct, ks_statistic, ks_statistic_point_mass, mean, pairwise_sum, sample_std, wasserstein2};

const CHANNEL_STREAM: u64 = 0;
const NOISE_STREAM: u64 = 1;
const LAW_STREAM: u64 = 2;
const CALIBRATION_STREAM: u64 = 3;
/// Independent pairs averaged for the W2 self-distance calibration.
const CALIBRATION_REPLICATES: u64 = 8;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// `m x n` channel with i.i.d. `N(0, 1/n)` entries and uniform BPSK symbols.
pub fn generate_instance(n: usize, m: usize, seed: u64) -> ChannelInstance {
    assert!(n >= 1 && m >= 1, "instance dimensions must be positive");
    let mut rng = stream(seed, CHANNEL_STREAM);
    let scale = 1.0 / (n as f64).sqrt();
    let h = DMatrix::from_fn(m, n, |_, _| scale * rng.sample::<f64, _>(StandardNormal));
    let s = DVector::from_fn(m, |_, _| if rng.random::<bool>() { 1.0 } else { -1.0 });
    ChannelInstance { h, s }
}

/// Users for `n` antennas at load `delta`.
pub fn user_count(delta: f64, n: usize) -> Result<usize> {
    let m = (delta * n as f64).round();
    if m < 1.0 {
        return Err(Error::InvalidParams(format!("delta * n = {} rounds to no users", delta * n as f64)));
    }
    Ok(m as usize)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    /// `||x||^2 / n`.
    pub pb: f64,
    /// `||Hx - sqrt(rho) s||^2 / m`.
    pub pd: f64,
    pub ber: f64,
    pub sinr_lb_est: f64,
    pub sinr_up_est: f64,
    pub x_entries: Vec<f64>,
    /// `(e_k, s_k)` with `e = Hx - sqrt(rho) s`.
    pub distortion_pairs: Vec<(f64, f64)>,
    pub seed: u64,
}

/// Fraction of positions where `sign(y_i) != s_i`, with `sign(0) = +1`.
pub fn bit_error_rate(y: &[f64], s: &[f64]) -> f64 {
    let errors = y
        .iter()
        .zip(s)
        .filter(|(&yi, &si)| (if yi >= 0.0 { 1.0 } else { -1.0 }) != si)
        .count();
    errors as f64 / y.len() as f64
}

/// Metrics of a precoded vector on one instance; `noise` is the received noise.
fn measure(inst: &ChannelInstance, x: &DVector<f64>, noise: &DVector<f64>, params: &SystemParams, seed: u64) -> TrialRecord {
    let n = inst.n() as f64;
    let m = inst.m() as f64;
    let hx = &inst.h * x;
    let e = &hx - &inst.s * params.rho.sqrt();
    let y = &hx + noise;
    let sq: Vec<f64> = e.iter().map(|v| v * v).collect();
    let pd = pairwise_sum(&sq) / m;
    let up: Vec<f64> = e.iter().map(|v| params.rho / (v * v + params.sigma2)).collect();
    let x_sq: Vec<f64> = x.iter().map(|v| v * v).collect();
    TrialRecord {
        pb: pairwise_sum(&x_sq) / n,
        pd,
        ber: bit_error_rate(y.as_slice(), inst.s.as_slice()),
        sinr_lb_est: params.rho / (pd + params.sigma2),
        sinr_up_est: pairwise_sum(&up) / m,
        x_entries: x.iter().copied().collect(),
        distortion_pairs: e.iter().copied().zip(inst.s.iter().copied()).collect(),
        seed,
    }
}

/// Draws an instance, precodes it, passes it through the noisy channel and measures everything.
pub fn run_trial(params: &SystemParams, n: usize, seed: u64, method: Method, opts: SolverOptions) -> Result<TrialRecord> {
    params.validate()?;
    let m = user_count(params.delta, n)?;
    let inst = generate_instance(n, m, seed);
    let sol = precode(&inst, params, method, opts)?;
    let mut rng = stream(seed, NOISE_STREAM);
    let sigma = params.sigma();
    let noise = DVector::from_fn(m, |_, _| sigma * rng.sample::<f64, _>(StandardNormal));
    Ok(measure(&inst, &sol.x, &noise, params, seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(count)`.
    pub std_err: f64,
    pub count: usize,
}

impl MetricSummary {
    pub fn of(values: &[f64]) -> Self {
        MetricSummary {
            mean: mean(values),
            std_err: sample_std(values) / (values.len() as f64).sqrt(),
            count: values.len(),
        }
    }

    /// `(mean - theory) / std_err`; `0` when both differences vanish.
    pub fn z_score(&self, theory: f64) -> f64 {
        let d = self.mean - theory;
        if d == 0.0 {
            0.0
        } else {
            d / self.std_err
        }
    }

    /// `|mean - theory| <= max(k SE, rel |theory|)`.
    pub fn agrees(&self, theory: f64, k: f64, rel: f64) -> bool {
        (self.mean - theory).abs() <= (k * self.std_err).max(rel * theory.abs())
    }
}

/// Distance of the pooled entries to the limiting law, with its calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionCheck {
    pub wasserstein2_x: f64,
    /// Mean W2 between two independent samples of the limit law, each the size of the pool.
    pub wasserstein2_self: f64,
    pub ks_distortion_plus: f64,
    pub ks_distortion_minus: f64,
    pub ks_critical_plus: f64,
    pub ks_critical_minus: f64,
}

impl DistributionCheck {
    pub fn passes(&self) -> bool {
        self.wasserstein2_x < 2.0 * self.wasserstein2_self
            && self.ks_distortion_plus < self.ks_critical_plus
            && self.ks_distortion_minus < self.ks_critical_minus
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalReport {
    pub trials: usize,
    pub pb: MetricSummary,
    pub pd: MetricSummary,
    pub ber: MetricSummary,
    pub sinr_lb_est: MetricSummary,
    pub sinr_up_est: MetricSummary,
    /// Present when a limiting law applies to the method.
    pub theory: Option<AsymptoticReport>,
    pub distribution: Option<DistributionCheck>,
}

/// Per-metric means and standard errors over at least two trials.
pub fn aggregate(trials: &[TrialRecord]) -> Result<EmpiricalReport> {
    if trials.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: trials.len() });
    }
    let summary = |f: fn(&TrialRecord) -> f64| MetricSummary::of(&trials.iter().map(f).collect::<Vec<_>>());
    Ok(EmpiricalReport {
        trials: trials.len(),
        pb: summary(|t| t.pb),
        pd: summary(|t| t.pd),
        ber: summary(|t| t.ber),
        sinr_lb_est: summary(|t| t.sinr_lb_est),
        sinr_up_est: summary(|t| t.sinr_up_est),
        theory: None,
        distribution: None,
    })
}

fn theta_sample(n: usize, sp: &SaddlePoint, params: &SystemParams, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| theta_map(rng.sample(StandardNormal), sp, params)).collect()
}

/// W2 distance between the pooled precoder entries and `law_samples` i.i.d. draws of `theta(H)`.
pub fn wasserstein2_solution(x_pool: &[f64], sp: &SaddlePoint, params: &SystemParams, law_samples: usize, seed: u64) -> f64 {
    let mut rng = stream(seed, LAW_STREAM);
    let law = theta_sample(law_samples.max(x_pool.len()), sp, params, &mut rng);
    wasserstein2(x_pool, &law)
}

/// Average W2 distance between two independent `theta(H)` samples of size `size`.
pub fn wasserstein2_self_distance(size: usize, sp: &SaddlePoint, params: &SystemParams, seed: u64) -> f64 {
    let distances: Vec<f64> = (0..CALIBRATION_REPLICATES)
        .map(|r| {
            let mut rng = stream(seed.wrapping_add(r), CALIBRATION_STREAM);
            let a = theta_sample(size, sp, params, &mut rng);
            let b = theta_sample(size, sp, params, &mut rng);
            wasserstein2(&a, &b)
        })
        .collect();
    mean(&distances)
}

/// One-sample KS statistics of the distortion entries, split by symbol, against the limiting law.
pub fn distortion_ks(pairs: &[(f64, f64)], law: &DistortionLaw) -> Result<(f64, f64)> {
    let branch = |sign: f64| -> Result<f64> {
        let sample: Vec<f64> = pairs.iter().filter(|(_, s)| *s == sign).map(|(e, _)| *e).collect();
        if sample.is_empty() {
            return Err(Error::EmptyBranch(sign as i8));
        }
        let mu = law.mean_given(sign);
        Ok(if law.std == 0.0 {
            ks_statistic_point_mass(&sample, mu)
        } else {
            ks_statistic(&sample, |e| q_function((mu - e) / law.std))
        })
    };
    Ok((branch(1.0)?, branch(-1.0)?))
}

fn branch_size(pairs: &[(f64, f64)], sign: f64) -> usize {
    pairs.iter().filter(|(_, s)| *s == sign).count()
}

/// Distributional comparison of pooled trials against the limiting laws of `sp`.
pub fn distribution_check(trials: &[TrialRecord], sp: &SaddlePoint, params: &SystemParams, seed: u64) -> Result<DistributionCheck> {
    let x_pool: Vec<f64> = trials.iter().flat_map(|t| t.x_entries.iter().copied()).collect();
    let pairs: Vec<(f64, f64)> = trials.iter().flat_map(|t| t.distortion_pairs.iter().copied()).collect();
    let law = distortion_law(sp, params)?;
    let (ks_plus, ks_minus) = distortion_ks(&pairs, &law)?;
    Ok(DistributionCheck {
        wasserstein2_x: wasserstein2_solution(&x_pool, sp, params, x_pool.len(), seed),
        wasserstein2_self: wasserstein2_self_distance(x_pool.len(), sp, params, seed),
        ks_distortion_plus: ks_plus,
        ks_distortion_minus: ks_minus,
        ks_critical_plus: ks_critical_1pct(branch_size(&pairs, 1.0)),
        ks_critical_minus: ks_critical_1pct(branch_size(&pairs, -1.0)),
    })
}

/// Parameters whose limiting theory describes `method`, if any.
///
/// RZF and ZF are the box-free members of the family; one-bit precoding has no
/// limiting law here. Fails when the theory has no finite saddle point.
pub fn theory_params(params: &SystemParams, method: Method) -> Result<Option<SystemParams>> {
    let p = match method {
        Method::LimitedPapr => *params,
        Method::Rzf => SystemParams { p_max: f64::INFINITY, ..*params },
        Method::Zf => SystemParams { p_max: f64::INFINITY, lambda: 0.0, ..*params },
        Method::OneBit => return Ok(None),
    };
    if !p.is_feasible() {
        return Err(Error::Infeasible(format!(
            "no finite saddle point at delta = {}, lambda = {}",
            p.delta, p.lambda
        )));
    }
    Ok(Some(p))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub params: SystemParams,
    pub n: usize,
    pub trials: usize,
    pub base_seed: u64,
    pub method: Method,
    pub opts: SolverOptions,
}

/// Runs trials with seeds `base_seed + i` in parallel; the result is in trial order.
pub fn run_trials(spec: &ExperimentSpec) -> Result<Vec<TrialRecord>> {
    (0..spec.trials as u64)
        .into_par_iter()
        .map(|i| run_trial(&spec.params, spec.n, spec.base_seed.wrapping_add(i), spec.method, spec.opts))
        .collect()
}

/// Trials, aggregate statistics and, when a limiting law applies, the theory comparison.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<(EmpiricalReport, Vec<TrialRecord>)> {
    if spec.trials < 2 {
        return Err(Error::InsufficientData { needed: 2, got: spec.trials });
    }
    let trials = run_trials(spec)?;
    let mut report = aggregate(&trials)?;
    if let Some(tp) = theory_params(&spec.params, spec.method)? {
        let theory = full_report(&tp)?;
        report.distribution = Some(distribution_check(&trials, &theory.saddle, &tp, spec.base_seed)?);
        report.theory = Some(theory);
    }
    Ok((report, trials))
}
