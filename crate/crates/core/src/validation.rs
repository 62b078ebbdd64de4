//! The acceptance criteria as executable checks, shared by `papr validate`
//! and the `acceptance` test target.

use std::fmt;
use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::asymptotics::{full_report, AsymptoticReport};
use crate::cli::{simulate_output, SimulateRequest};
use crate::error::Result;
use crate::gaussian::{central_square_band, q_function, truncated_square_upper, upper_m1, upper_m2, std_normal_pdf, Threshold};
use crate::monte_carlo::{aggregate, distribution_check, generate_instance, run_trials, EmpiricalReport, ExperimentSpec, TrialRecord};
use crate::oracle::{box_qp_coordinate_descent, grid_saddle};
use crate::precoder::{limited_papr_precode, objective, Method, SolverOptions};
use crate::quadrature::adaptive_simpson;
use crate::saddle::{fixed_point_residual, solve_saddle, SaddlePoint, SystemParams};
use crate::special_cases::{large_delta_limit, large_rho_expansion, small_delta_limit, small_rho_limit};
use crate::tuning::{pb_at, rho_for_target_pb};

#[derive(Debug, Clone, Copy, Default)]
pub struct ValidationOptions {
    /// Run only the criteria that finish well under a minute.
    pub quick: bool,
    /// Relative perturbation applied to `beta*` before the fixed-point checks.
    pub perturb_beta: f64,
}

pub const ALL: [u8; 10] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10];
pub const QUICK: [u8; 7] = [1, 2, 3, 4, 5, 6, 9];

/// One measured quantity against its bound.
#[derive(Debug, Clone)]
pub struct Check {
    pub label: String,
    pub measured: f64,
    pub bound: f64,
    pub ok: bool,
    /// The bound is exclusive.
    pub strict: bool,
    /// Pass/fail only; `measured` and `bound` carry no information.
    pub boolean: bool,
}

impl Check {
    fn below(label: impl Into<String>, measured: f64, bound: f64) -> Self {
        Check { label: label.into(), measured, bound, ok: measured < bound, strict: true, boolean: false }
    }

    fn at_most(label: impl Into<String>, measured: f64, bound: f64) -> Self {
        Check { label: label.into(), measured, bound, ok: measured <= bound, strict: false, boolean: false }
    }

    fn flag(label: impl Into<String>, ok: bool) -> Self {
        Check { label: label.into(), measured: f64::from(u8::from(ok)), bound: 1.0, ok, strict: false, boolean: true }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = if self.ok { "" } else { " !" };
        if self.boolean {
            return write!(f, "{}: {}{mark}", self.label, if self.ok { "yes" } else { "no" });
        }
        let cmp = if self.strict { "<" } else { "<=" };
        write!(f, "{}={:.4e} ({cmp} {:.1e}){mark}", self.label, self.measured, self.bound)
    }
}

#[derive(Debug, Clone)]
pub struct CriterionOutcome {
    pub id: u8,
    pub title: &'static str,
    pub checks: Vec<Check>,
    pub runtime_s: f64,
    pub runtime_limit_s: f64,
    /// Set when the criterion could not be evaluated at all.
    pub error: Option<String>,
}

impl CriterionOutcome {
    pub fn passed(&self) -> bool {
        self.error.is_none() && !self.checks.is_empty() && self.checks.iter().all(|c| c.ok) && self.runtime_s <= self.runtime_limit_s
    }
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        write!(f, "{verdict} [{:>2}] {} ({:.2}s / {:.0}s)", self.id, self.title, self.runtime_s, self.runtime_limit_s)?;
        if let Some(e) = &self.error {
            write!(f, " error: {e}")?;
        }
        for c in &self.checks {
            if !c.ok || self.checks.len() <= 8 {
                write!(f, "; {c}")?;
            }
        }
        let failed = self.checks.iter().filter(|c| !c.ok).count();
        if self.checks.len() > 8 {
            write!(f, "; {}/{} checks ok", self.checks.len() - failed, self.checks.len())?;
        }
        Ok(())
    }
}

fn title(id: u8) -> &'static str {
    match id {
        1 => "moment identities vs quadrature",
        2 => "saddle point vs grid oracle",
        3 => "RZF limit convergence",
        4 => "ZF limit convergence",
        5 => "limiting regimes",
        6 => "precoder optimality",
        7 => "Monte Carlo vs theory",
        8 => "distributional laws",
        9 => "rho tuning round trip",
        10 => "determinism",
        _ => "unknown",
    }
}

fn runtime_limit(id: u8) -> f64 {
    match id {
        1 => 1.0,
        2 => 30.0,
        3 | 4 => 5.0,
        5 => 60.0,
        6 => 10.0,
        7 | 8 => monte_carlo_budget(),
        9 => 30.0,
        10 => 120.0,
        _ => 0.0,
    }
}

/// Five minutes single-threaded, one minute with at least 8-way parallelism.
fn monte_carlo_budget() -> f64 {
    if rayon::current_num_threads() >= 8 {
        60.0
    } else {
        300.0
    }
}

/// Evaluates one criterion.
pub fn evaluate(id: u8, opts: &ValidationOptions) -> CriterionOutcome {
    let start = Instant::now();
    let result = match id {
        1 => moment_identities(),
        2 => saddle_vs_oracle(opts),
        3 => rzf_limit_convergence(opts),
        4 => zf_limit_convergence(),
        5 => limiting_regimes(),
        6 => precoder_optimality(),
        7 => monte_carlo_vs_theory(),
        8 => distributional_laws(),
        9 => tuning_round_trip(),
        10 => determinism(),
        _ => Ok(Vec::new()),
    };
    let mut runtime_s = start.elapsed().as_secs_f64();
    if id == 7 {
        // the shared trials are counted here even if criterion 8 ran them first
        runtime_s = runtime_s.max(fig1_runtime());
    }
    let (checks, error) = match result {
        Ok(c) => (c, None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    CriterionOutcome { id, title: title(id), checks, runtime_s, runtime_limit_s: runtime_limit(id), error }
}

/// Evaluates the full suite, or the quick subset.
pub fn run(opts: &ValidationOptions) -> Vec<CriterionOutcome> {
    let ids: &[u8] = if opts.quick { &QUICK } else { &ALL };
    ids.iter().map(|&id| evaluate(id, opts)).collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

fn params(delta: f64, rho: f64, lambda: f64, p_max: f64, sigma: f64) -> SystemParams {
    SystemParams::with_sigma(delta, rho, lambda, p_max, sigma).expect("validation parameters are valid")
}

fn perturbed(sp: SaddlePoint, params: &SystemParams, eps: f64) -> SaddlePoint {
    if eps == 0.0 {
        sp
    } else {
        SaddlePoint::from_coordinates(sp.beta_star * (1.0 + eps), sp.tau_star, params)
    }
}

fn moment_identities() -> Result<Vec<Check>> {
    // unit-width panels so that no panel can look flat at its three Simpson nodes
    let quad = |f: &dyn Fn(f64) -> f64, lo: f64, hi: f64| -> Result<f64> {
        let panels = (hi - lo).ceil() as usize;
        let width = (hi - lo) / panels as f64;
        (0..panels)
            .map(|k| adaptive_simpson(f, lo + k as f64 * width, lo + (k + 1) as f64 * width, 1e-15, 60))
            .sum()
    };
    let mut worst = [0.0f64; 5];
    for k in 0..=60 {
        let a = k as f64 / 10.0;
        let t = Threshold::new(a)?;
        let top = 40.0;
        let oracles = [
            quad(&std_normal_pdf, a, top)?,
            quad(&|x| x * std_normal_pdf(x), a, top)?,
            quad(&|x| x * x * std_normal_pdf(x), a, top)?,
            quad(&|x| (x - a).powi(2) * std_normal_pdf(x), a, top)?,
            if a == 0.0 { 0.0 } else { quad(&|x| x * x * std_normal_pdf(x), -a, a)? },
        ];
        let values = [q_function(a), upper_m1(t), upper_m2(t), truncated_square_upper(t), central_square_band(t)];
        for i in 0..5 {
            worst[i] = worst[i].max((values[i] - oracles[i]).abs());
        }
    }
    let names = ["Q", "upper_m1", "upper_m2", "truncated_square_upper", "central_square_band"];
    Ok(names.iter().zip(worst).map(|(n, w)| Check::at_most(*n, w, 1e-10)).collect())
}

fn saddle_vs_oracle(opts: &ValidationOptions) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut d_beta, mut d_tau, mut residual) = (0.0f64, 0.0f64, 0.0f64);
    let mut count = 0;
    while count < 10 {
        let p = SystemParams::new(
            rng.random_range(0.5..3.0),
            rng.random_range(0.1..10.0),
            rng.random_range(0.0..1.0),
            rng.random_range(0.5..50.0),
            0.01,
        )?;
        if !p.is_feasible() {
            continue;
        }
        count += 1;
        let sp = perturbed(solve_saddle(&p)?, &p, opts.perturb_beta);
        let (beta, tau) = grid_saddle(&p);
        d_beta = d_beta.max((sp.beta_star - beta).abs());
        d_tau = d_tau.max((sp.tau_star - tau).abs());
        residual = residual.max(fixed_point_residual(&sp, &p));
    }
    Ok(vec![
        Check::below("max|dbeta|", d_beta, 1e-4),
        Check::below("max|dtau|", d_tau, 1e-4),
        Check::below("max fixed-point residual", residual, 1e-8),
    ])
}

fn rzf_limit_convergence(opts: &ValidationOptions) -> Result<Vec<Check>> {
    let p = params(2.0, 1.0, 1.0, 1e5, 0.1);
    let sp = perturbed(solve_saddle(&p)?, &p, opts.perturb_beta);
    Ok(vec![
        Check::below("|tau*-0.77689|", (sp.tau_star - 0.77689).abs(), 1e-3),
        Check::below("|beta*-2.19737|", (sp.beta_star - 2.19737).abs(), 1e-3),
    ])
}

fn zf_limit_convergence() -> Result<Vec<Check>> {
    let r = full_report(&params(2.0, 1.0, 0.0, 100.0, 0.1))?;
    Ok(vec![
        Check::at_most("|pb*-1|", (r.pb_star - 1.0).abs(), 1e-6),
        Check::at_most("|pd*-0.5|", (r.pd_star - 0.5).abs(), 1e-6),
        Check::at_most("|pe*-0.16339|", (r.pe_star - 0.16339).abs(), 1e-4),
    ])
}

fn limiting_regimes() -> Result<Vec<Check>> {
    let mut checks = Vec::new();

    let p = params(1e-3, 1.0, 1.0, 1.0, 0.1);
    let (r, lim) = (full_report(&p)?, small_delta_limit(&p)?);
    checks.push(Check::at_most("small-delta pd rel", rel(r.pd_star, lim.pd), 0.02));
    checks.push(Check::at_most("small-delta pe rel", rel(r.pe_star, lim.pe), 0.02));

    let p = params(100.0, 1.0, 0.01, 1.0, 0.1);
    let (r, lim) = (full_report(&p)?, large_delta_limit(&p)?);
    checks.push(Check::at_most("large-delta pd rel", rel(r.pd_star, lim.pd), 0.02));
    checks.push(Check::at_most("large-delta |pe-1/2|", (r.pe_star - lim.pe).abs(), 1e-3));

    let p = params(2.0, 1e-6, 1.0, 1.0, 0.1);
    let (r, lim) = (full_report(&p)?, small_rho_limit(&p)?);
    checks.push(Check::at_most("small-rho pb rel", rel(r.pb_star, lim.pb), 0.01));
    checks.push(Check::at_most("small-rho pd rel", rel(r.pd_star, lim.pd), 0.01));
    checks.push(Check::at_most("small-rho sinr_lb rel", rel(r.sinr_lb_star, lim.sinr_lb), 0.01));
    checks.push(Check::at_most("small-rho (1/2-pe) rel", rel(0.5 - r.pe_star, 0.5 - lim.pe), 0.01));

    let p = params(1.2, 1e6, 0.01, 25.0, 0.1);
    let (r, lim) = (full_report(&p)?, large_rho_expansion(&p)?);
    checks.push(Check::at_most("large-rho pb rel", rel(r.pb_star, lim.pb), 0.005));
    checks.push(Check::at_most("large-rho |pe-Q|", (r.pe_star - lim.pe).abs(), 1e-3));
    Ok(checks)
}

fn precoder_optimality() -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut gap, mut kkt, mut failures) = (0.0f64, 0.0f64, 0usize);
    for i in 0..20u64 {
        let n = rng.random_range(1..=8usize);
        let m = rng.random_range(1..=12usize);
        let p = SystemParams::new(
            m as f64 / n as f64,
            rng.random_range(0.1..10.0),
            rng.random_range(0.0..1.0),
            rng.random_range(0.05..4.0),
            0.01,
        )?;
        let inst = generate_instance(n, m, 600 + i);
        match limited_papr_precode(&inst, &p, SolverOptions::default()) {
            Ok(sol) => {
                let oracle = box_qp_coordinate_descent(&inst, &p, 1e-12, 10_000_000);
                gap = gap.max((sol.objective - objective(&oracle, &inst, p.rho, p.lambda)).abs());
                kkt = kkt.max(sol.kkt_residual);
            }
            Err(_) => failures += 1,
        }
    }
    Ok(vec![
        Check::at_most("max objective gap", gap, 1e-8),
        Check::at_most("max KKT residual", kkt, 1e-8),
        Check::at_most("failed solves", failures as f64, 0.0),
    ])
}

pub const FIG1_RHOS: [f64; 3] = [0.5, 1.0, 2.0];

fn fig1_spec(rho: f64) -> ExperimentSpec {
    ExperimentSpec {
        params: params(1.5, rho, 0.01, 1.0, 0.1),
        n: 256,
        trials: 50,
        base_seed: 0,
        method: Method::LimitedPapr,
        opts: SolverOptions::default(),
    }
}

struct Fig1Run {
    rho: f64,
    params: SystemParams,
    trials: Vec<TrialRecord>,
    report: EmpiricalReport,
    theory: AsymptoticReport,
}

static FIG1: OnceLock<(std::result::Result<Vec<Fig1Run>, String>, f64)> = OnceLock::new();

fn fig1_runs() -> std::result::Result<&'static [Fig1Run], String> {
    let (runs, _) = FIG1.get_or_init(|| {
        let start = Instant::now();
        let runs = FIG1_RHOS
            .iter()
            .map(|&rho| {
                let spec = fig1_spec(rho);
                let trials = run_trials(&spec)?;
                Ok(Fig1Run {
                    rho,
                    params: spec.params,
                    report: aggregate(&trials)?,
                    theory: full_report(&spec.params)?,
                    trials,
                })
            })
            .collect::<Result<Vec<_>>>()
            .map_err(|e| e.to_string());
        (runs, start.elapsed().as_secs_f64())
    });
    runs.as_deref().map_err(Clone::clone)
}

fn fig1_runtime() -> f64 {
    FIG1.get().map_or(0.0, |(_, t)| *t)
}

fn monte_carlo_vs_theory() -> Result<Vec<Check>> {
    let runs = fig1_runs().map_err(crate::Error::Degenerate)?;
    let mut checks = Vec::new();
    for run in runs {
        let r = &run.report;
        let t = &run.theory;
        for (name, metric, theory) in [
            ("pb", r.pb, t.pb_star),
            ("pd", r.pd, t.pd_star),
            ("sinr_lb", r.sinr_lb_est, t.sinr_lb_star),
            ("ber", r.ber, t.pe_star),
        ] {
            let allowed = (3.0 * metric.std_err).max(0.02 * theory.abs());
            checks.push(Check::at_most(format!("rho={} {name} |emp-theory|", run.rho), (metric.mean - theory).abs(), allowed));
        }
    }
    Ok(checks)
}

fn distributional_laws() -> Result<Vec<Check>> {
    let runs = fig1_runs().map_err(crate::Error::Degenerate)?;
    let mut checks = Vec::new();
    for run in runs {
        let d = distribution_check(&run.trials, &run.theory.saddle, &run.params, 0)?;
        checks.push(Check::below(format!("rho={} W2(x)", run.rho), d.wasserstein2_x, 2.0 * d.wasserstein2_self));
        checks.push(Check::below(format!("rho={} KS+", run.rho), d.ks_distortion_plus, d.ks_critical_plus));
        checks.push(Check::below(format!("rho={} KS-", run.rho), d.ks_distortion_minus, d.ks_critical_minus));
    }
    Ok(checks)
}

/// Targets, tuned `rho` and `sinr_lb*` of the tuning criterion.
pub fn tuned_grid() -> Result<Vec<(f64, f64, f64)>> {
    let base = params(1.2, 1.0, 0.02, 50.0, 0.1);
    (1..=9)
        .map(|k| {
            let target = 0.1 * k as f64 * base.p_max;
            let tuned = rho_for_target_pb(target, &base, 1e-6)?;
            let sinr = full_report(&base.with_rho(tuned.rho))?.sinr_lb_star;
            Ok((target, tuned.rho, sinr))
        })
        .collect()
}

fn tuning_round_trip() -> Result<Vec<Check>> {
    let base = params(1.2, 1.0, 0.02, 50.0, 0.1);
    let grid = tuned_grid()?;
    let mut worst = 0.0f64;
    for &(target, rho, _) in &grid {
        worst = worst.max((pb_at(&base, rho)? - target).abs());
    }
    // sinr_lb* -> 0 as rho -> 0 and -> 1 as rho -> inf, so a tuned point above
    // both endpoint values means the supremum is attained at a finite rho
    let (best_target, _, best_sinr) = grid.iter().copied().fold((0.0, 0.0, f64::NEG_INFINITY), |a, b| if b.2 > a.2 { b } else { a });
    let endpoint_sup = large_rho_expansion(&base.with_rho(1e12))?.sinr_lb.max(1.0);
    Ok(vec![
        Check::at_most("max|pb*(rho)-target|", worst, 1e-6),
        Check::flag(format!("max sinr_lb*={best_sinr:.4} above endpoint limit {endpoint_sup:.4}"), best_sinr > endpoint_sup),
        Check::flag(format!("argmax pb={best_target} < P"), best_target < base.p_max),
    ])
}

/// Reference request used by the determinism criterion.
pub fn determinism_request() -> SimulateRequest {
    SimulateRequest {
        params: params(1.5, 1.0, 0.01, 1.0, 0.1),
        n: 128,
        trials: 8,
        seed: 7,
        method: Method::LimitedPapr,
        opts: SolverOptions::default(),
        format: crate::cli::Format::Json,
    }
}

fn determinism() -> Result<Vec<Check>> {
    let req = determinism_request();
    let first = simulate_output(&req)?;
    let second = simulate_output(&req)?;
    let serial_pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().map_err(|e| crate::Error::Degenerate(e.to_string()))?;
    let serial = serial_pool.install(|| simulate_output(&req))?;
    let wide_pool = rayon::ThreadPoolBuilder::new().num_threads(8).build().map_err(|e| crate::Error::Degenerate(e.to_string()))?;
    let wide = wide_pool.install(|| simulate_output(&req))?;
    Ok(vec![
        Check::flag("repeat run identical", first == second),
        Check::flag("1-thread run identical", first == serial),
        Check::flag("8-thread run identical", first == wide),
    ])
}
