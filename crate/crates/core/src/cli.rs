//! Command-line front end behind the `papr` binary.
//!
//! Every command builds a table of named cells and renders it as JSON or CSV.
//! Numbers are rounded to 12 significant digits before rendering, so the two
//! formats carry identical values.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{Map, Value};

use crate::asymptotics::{full_report, AsymptoticReport};
use crate::error::{Error, Result};
use crate::monte_carlo::{aggregate, run_experiment, run_trials, theory_params, user_count, EmpiricalReport, ExperimentSpec, MetricSummary};
use crate::precoder::{Method, SolverOptions};
use crate::saddle::SystemParams;
use crate::tuning::{rho_for_target_pb, DEFAULT_TOL};
use crate::validation::{self, ValidationOptions};

#[derive(Debug, Parser)]
#[command(name = "papr", version, about = "Limited-PAPR precoding: large-system theory and Monte Carlo validation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the saddle point and print every large-system metric.
    Analyze {
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run Monte Carlo trials and compare them with the theory.
    Simulate {
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Evaluate the theory (and optionally simulations) over a parameter grid.
    Sweep {
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        sim: SimArgs,
        /// Monte Carlo trials per grid point; 0 skips the simulation columns.
        #[arg(long, default_value_t = 0)]
        trials: usize,
        /// Tune rho at every grid point so that pb* hits this value.
        #[arg(long)]
        target_pb: Option<f64>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Find the rho that gives a target per-antenna power.
    TuneRho {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        target_pb: f64,
        /// Absolute tolerance on pb*.
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run the acceptance criteria and print one line per criterion.
    Validate {
        /// Only the criteria that finish in well under a minute.
        #[arg(long)]
        quick: bool,
        /// Relative perturbation of beta* injected before the fixed-point checks.
        #[arg(long, hide = true, default_value_t = 0.0)]
        perturb_beta: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct ParamArgs {
    /// Users per antenna, m/n.
    #[arg(long, default_value_t = 1.5)]
    pub delta: f64,
    /// Power control factor.
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    /// Ridge weight.
    #[arg(long, default_value_t = 0.01)]
    pub lambda: f64,
    /// Per-antenna power cap P; `inf` removes the box.
    #[arg(long, default_value_t = 1.0)]
    pub p_max: f64,
    /// Noise standard deviation.
    #[arg(long, default_value_t = 0.1)]
    pub sigma: f64,
}

impl ParamArgs {
    pub fn to_params(&self) -> Result<SystemParams> {
        SystemParams::with_sigma(self.delta, self.rho, self.lambda, self.p_max, self.sigma)
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    /// Antennas per trial.
    #[arg(long, default_value_t = 256)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = MethodArg::Papr)]
    pub method: MethodArg,
    /// Gradient-mapping tolerance of the limited-PAPR solver.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 20_000)]
    pub max_iter: usize,
}

impl SimArgs {
    fn opts(&self) -> SolverOptions {
        SolverOptions { tol: self.tol, max_iter: self.max_iter }
    }
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Parameter to sweep.
    #[arg(long = "sweep", value_enum)]
    pub param: SweepParam,
    /// Explicit grid values.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["from", "to", "steps"])]
    pub values: Option<Vec<f64>>,
    #[arg(long, requires_all = ["to", "steps"])]
    pub from: Option<f64>,
    #[arg(long)]
    pub to: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Space the range logarithmically.
    #[arg(long)]
    pub log: bool,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Defaults to csv for sweeps and json otherwise.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Papr,
    Rzf,
    Zf,
    Onebit,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Papr => Method::LimitedPapr,
            MethodArg::Rzf => Method::Rzf,
            MethodArg::Zf => Method::Zf,
            MethodArg::Onebit => Method::OneBit,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepParam {
    Delta,
    Rho,
    Lambda,
    PMax,
    Sigma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// A table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Empty,
}

pub type Row = Vec<(String, Cell)>;

/// Rounds to 12 significant digits.
pub fn round12(v: f64) -> f64 {
    if v.is_finite() && v != 0.0 {
        format!("{v:.11e}").parse().unwrap_or(v)
    } else {
        v
    }
}

fn num_text(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        serde_json::Number::from_f64(round12(v)).map_or_else(|| v.to_string(), |n| n.to_string())
    }
}

fn cell_json(c: &Cell) -> Value {
    match c {
        Cell::Num(v) => serde_json::Number::from_f64(round12(*v)).map_or(Value::Null, Value::Number),
        Cell::Int(i) => Value::from(*i),
        Cell::Text(s) => Value::from(s.clone()),
        Cell::Empty => Value::Null,
    }
}

fn cell_csv(c: &Cell) -> String {
    match c {
        Cell::Num(v) => num_text(*v),
        Cell::Int(i) => i.to_string(),
        Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
        Cell::Text(s) => s.clone(),
        Cell::Empty => String::new(),
    }
}

fn row_json(row: &Row) -> Value {
    Value::Object(row.iter().map(|(k, c)| (k.clone(), cell_json(c))).collect::<Map<_, _>>())
}

/// Renders rows; a single row renders as a JSON object, several as an array.
pub fn render(rows: &[Row], format: Format) -> String {
    match format {
        Format::Json => {
            let value = if rows.len() == 1 { row_json(&rows[0]) } else { Value::Array(rows.iter().map(row_json).collect()) };
            let mut s = serde_json::to_string_pretty(&value).expect("JSON values always serialize");
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut s = String::new();
            if let Some(first) = rows.first() {
                let header: Vec<&str> = first.iter().map(|(k, _)| k.as_str()).collect();
                let _ = writeln!(s, "{}", header.join(","));
            }
            for row in rows {
                let cells: Vec<String> = row.iter().map(|(_, c)| cell_csv(c)).collect();
                let _ = writeln!(s, "{}", cells.join(","));
            }
            s
        }
    }
}

fn db(v: f64) -> f64 {
    10.0 * v.log10()
}

fn push(row: &mut Row, key: &str, cell: Cell) {
    row.push((key.to_string(), cell));
}

fn param_cells(row: &mut Row, p: &SystemParams) {
    for (k, v) in [("delta", p.delta), ("rho", p.rho), ("lambda", p.lambda), ("p_max", p.p_max), ("sigma", p.sigma())] {
        push(row, k, Cell::Num(v));
    }
}

fn theory_cells(row: &mut Row, r: Option<&AsymptoticReport>) {
    let cells: [(&str, Option<f64>); 9] = [
        ("beta_star", r.map(|r| r.saddle.beta_star)),
        ("tau_star", r.map(|r| r.saddle.tau_star)),
        ("pb_star", r.map(|r| r.pb_star)),
        ("pd_star", r.map(|r| r.pd_star)),
        ("sinr_lb_star", r.map(|r| r.sinr_lb_star)),
        ("sinr_up_star", r.map(|r| r.sinr_up_star)),
        ("pe_star", r.map(|r| r.pe_star)),
        ("sinr_lb_star_db", r.map(|r| db(r.sinr_lb_star))),
        ("sinr_up_star_db", r.map(|r| db(r.sinr_up_star))),
    ];
    for (k, v) in cells {
        push(row, k, v.map_or(Cell::Empty, Cell::Num));
    }
}

/// Rows of `papr analyze`.
pub fn analyze_rows(params: &SystemParams) -> Result<Vec<Row>> {
    let r = full_report(params)?;
    let mut row = Row::new();
    param_cells(&mut row, params);
    let sp = &r.saddle;
    for (k, v) in [
        ("beta_star", sp.beta_star),
        ("tau_star", sp.tau_star),
        ("alpha_star", sp.alpha_star),
        ("phi_bar", sp.phi_bar),
        ("residual", sp.residual),
        ("pb_star", r.pb_star),
        ("pd_star", r.pd_star),
        ("sinr_lb_star", r.sinr_lb_star),
        ("sinr_up_star", r.sinr_up_star),
        ("pe_star", r.pe_star),
        ("sinr_lb_star_db", db(r.sinr_lb_star)),
        ("sinr_up_star_db", db(r.sinr_up_star)),
        ("distortion_std", r.distortion_std),
        ("distortion_mean_mag", r.distortion_mean_mag),
    ] {
        push(&mut row, k, Cell::Num(v));
    }
    Ok(vec![row])
}

/// Everything `papr simulate` needs.
#[derive(Debug, Clone, Copy)]
pub struct SimulateRequest {
    pub params: SystemParams,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub method: Method,
    pub opts: SolverOptions,
    pub format: Format,
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::LimitedPapr => "papr",
        Method::Rzf => "rzf",
        Method::Zf => "zf",
        Method::OneBit => "onebit",
    }
}

fn metric_cells(row: &mut Row, name: &str, m: &MetricSummary, theory: Option<f64>) {
    push(row, &format!("{name}_mean"), Cell::Num(m.mean));
    push(row, &format!("{name}_se"), Cell::Num(m.std_err));
    push(row, &format!("{name}_theory"), theory.map_or(Cell::Empty, Cell::Num));
    push(row, &format!("{name}_z"), theory.map_or(Cell::Empty, |t| Cell::Num(m.z_score(t))));
}

/// Rows of `papr simulate`.
pub fn simulate_rows(req: &SimulateRequest) -> Result<Vec<Row>> {
    if req.n < 8 {
        return Err(Error::InvalidParams(format!("simulation needs n >= 8, got {}", req.n)));
    }
    let spec = ExperimentSpec { params: req.params, n: req.n, trials: req.trials, base_seed: req.seed, method: req.method, opts: req.opts };
    let (report, _) = run_experiment(&spec)?;
    let mut row = Row::new();
    param_cells(&mut row, &req.params);
    push(&mut row, "n", Cell::Int(req.n as u64));
    push(&mut row, "m", Cell::Int(user_count(req.params.delta, req.n)? as u64));
    push(&mut row, "trials", Cell::Int(req.trials as u64));
    push(&mut row, "seed", Cell::Int(req.seed));
    push(&mut row, "method", Cell::Text(method_name(req.method).into()));
    let t = report.theory.as_ref();
    metric_cells(&mut row, "pb", &report.pb, t.map(|t| t.pb_star));
    metric_cells(&mut row, "pd", &report.pd, t.map(|t| t.pd_star));
    metric_cells(&mut row, "sinr_lb", &report.sinr_lb_est, t.map(|t| t.sinr_lb_star));
    metric_cells(&mut row, "sinr_up", &report.sinr_up_est, t.map(|t| t.sinr_up_star));
    metric_cells(&mut row, "ber", &report.ber, t.map(|t| t.pe_star));
    push(&mut row, "sinr_lb_mean_db", Cell::Num(db(report.sinr_lb_est.mean)));
    push(&mut row, "sinr_lb_theory_db", t.map_or(Cell::Empty, |t| Cell::Num(db(t.sinr_lb_star))));
    let d = report.distribution.as_ref();
    for (k, v) in [
        ("w2_x", d.map(|d| d.wasserstein2_x)),
        ("w2_self", d.map(|d| d.wasserstein2_self)),
        ("ks_plus", d.map(|d| d.ks_distortion_plus)),
        ("ks_minus", d.map(|d| d.ks_distortion_minus)),
        ("ks_critical_plus", d.map(|d| d.ks_critical_plus)),
        ("ks_critical_minus", d.map(|d| d.ks_critical_minus)),
    ] {
        push(&mut row, k, v.map_or(Cell::Empty, Cell::Num));
    }
    push(&mut row, "distribution_pass", d.map_or(Cell::Empty, |d| Cell::Text(d.passes().to_string())));
    Ok(vec![row])
}

/// Rendered output of `papr simulate`.
pub fn simulate_output(req: &SimulateRequest) -> Result<String> {
    Ok(render(&simulate_rows(req)?, req.format))
}

/// Grid values of a sweep.
pub fn grid_values(g: &GridArgs) -> Result<Vec<f64>> {
    if let Some(v) = &g.values {
        if v.is_empty() {
            return Err(Error::InvalidParams("--values is empty".into()));
        }
        return Ok(v.clone());
    }
    let (Some(from), Some(to), Some(steps)) = (g.from, g.to, g.steps) else {
        return Err(Error::InvalidParams("give either --values or --from/--to/--steps".into()));
    };
    if steps == 0 {
        return Err(Error::InvalidParams("--steps must be at least 1".into()));
    }
    if g.log && !(from > 0.0 && to > 0.0) {
        return Err(Error::InvalidParams("a log grid needs positive endpoints".into()));
    }
    if steps == 1 {
        return Ok(vec![from]);
    }
    Ok((0..steps)
        .map(|i| {
            let u = i as f64 / (steps - 1) as f64;
            if g.log {
                from * (to / from).powf(u)
            } else {
                from + (to - from) * u
            }
        })
        .collect())
}

/// Everything `papr sweep` needs.
#[derive(Debug, Clone)]
pub struct SweepRequest {
    pub base: SystemParams,
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub target_pb: Option<f64>,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub method: Method,
    pub opts: SolverOptions,
}

fn with_value(base: &SystemParams, param: SweepParam, v: f64) -> Result<SystemParams> {
    let mut p = *base;
    match param {
        SweepParam::Delta => p.delta = v,
        SweepParam::Rho => p.rho = v,
        SweepParam::Lambda => p.lambda = v,
        SweepParam::PMax => p.p_max = v,
        SweepParam::Sigma => {
            if v.is_nan() || v < 0.0 {
                return Err(Error::InvalidParams(format!("sigma must be >= 0, got {v}")));
            }
            p.sigma2 = v * v;
        }
    }
    p.validate()?;
    Ok(p)
}

fn status_of(e: &Error) -> &'static str {
    match e {
        Error::Infeasible(_) => "infeasible",
        Error::TargetUnreachable { .. } => "unreachable",
        Error::InvalidParams(_) => "invalid",
        Error::NonMonotone { .. } => "non_monotone",
        Error::InsufficientData { .. } | Error::EmptyBranch(_) => "insufficient_data",
        Error::Convergence { .. } | Error::PrecoderConvergence(_) | Error::Bracket(_) => "convergence",
        _ => "error",
    }
}

struct SweepPoint {
    params: SystemParams,
    theory: Option<AsymptoticReport>,
    empirical: Option<EmpiricalReport>,
}

fn sweep_point(req: &SweepRequest, v: f64) -> (SystemParams, Result<SweepPoint>) {
    let mut shown = req.base;
    match req.param {
        SweepParam::Delta => shown.delta = v,
        SweepParam::Rho => shown.rho = v,
        SweepParam::Lambda => shown.lambda = v,
        SweepParam::PMax => shown.p_max = v,
        SweepParam::Sigma => shown.sigma2 = v * v,
    }
    let result = (|| {
        let mut params = with_value(&req.base, req.param, v)?;
        if let Some(target) = req.target_pb {
            params.rho = rho_for_target_pb(target, &params, DEFAULT_TOL)?.rho;
        }
        let theory = theory_params(&params, req.method)?.map(|tp| full_report(&tp)).transpose()?;
        let empirical = if req.trials > 0 {
            let spec = ExperimentSpec { params, n: req.n, trials: req.trials, base_seed: req.seed, method: req.method, opts: req.opts };
            Some(aggregate(&run_trials(&spec)?)?)
        } else {
            None
        };
        Ok(SweepPoint { params, theory, empirical })
    })();
    if let Ok(point) = &result {
        shown = point.params;
    }
    (shown, result)
}

/// Rows of `papr sweep`, in grid order.
pub fn sweep_rows(req: &SweepRequest) -> Result<Vec<Row>> {
    let points: Vec<_> = req.values.par_iter().map(|&v| sweep_point(req, v)).collect();
    if points.iter().all(|(_, r)| matches!(r, Err(Error::Infeasible(_) | Error::TargetUnreachable { .. }))) {
        return Err(Error::Infeasible("every grid point is infeasible".into()));
    }
    let metric_names = ["pb", "pd", "sinr_lb_est", "sinr_up_est", "ber"];
    Ok(points
        .iter()
        .map(|(shown, result)| {
            let mut row = Row::new();
            param_cells(&mut row, shown);
            let ok = result.as_ref().ok();
            theory_cells(&mut row, ok.and_then(|p| p.theory.as_ref()));
            if req.trials > 0 {
                let e = ok.and_then(|p| p.empirical.as_ref());
                for name in metric_names {
                    let m = e.map(|e| match name {
                        "pb" => e.pb,
                        "pd" => e.pd,
                        "sinr_lb_est" => e.sinr_lb_est,
                        "sinr_up_est" => e.sinr_up_est,
                        _ => e.ber,
                    });
                    push(&mut row, &format!("{name}_mean"), m.map_or(Cell::Empty, |m| Cell::Num(m.mean)));
                    push(&mut row, &format!("{name}_se"), m.map_or(Cell::Empty, |m| Cell::Num(m.std_err)));
                }
                push(&mut row, "sinr_lb_est_mean_db", e.map_or(Cell::Empty, |e| Cell::Num(db(e.sinr_lb_est.mean))));
            }
            let status = match result {
                Ok(_) => "ok",
                Err(e) => status_of(e),
            };
            push(&mut row, "status", Cell::Text(status.into()));
            row
        })
        .collect())
}

/// Rows of `papr tune-rho`.
pub fn tune_rows(params: &SystemParams, target: f64, tol: f64) -> Result<Vec<Row>> {
    let r = rho_for_target_pb(target, params, tol)?;
    let mut row = Row::new();
    param_cells(&mut row, &params.with_rho(r.rho));
    push(&mut row, "target_pb", Cell::Num(target));
    push(&mut row, "achieved_pb", Cell::Num(r.achieved_pb));
    push(&mut row, "iterations", Cell::Int(r.iterations as u64));
    push(&mut row, "bracket_lo", Cell::Num(r.bracket.0));
    push(&mut row, "bracket_hi", Cell::Num(r.bracket.1));
    Ok(vec![row])
}

/// Failure of a command, with its process exit code.
#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Io(std::io::Error),
    ValidationFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => e.exit_code(),
            CliError::Io(_) => 3,
            CliError::ValidationFailed(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
            CliError::ValidationFailed(n) => write!(f, "{n} acceptance criteria failed"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

fn emit(text: &str, out: Option<&PathBuf>) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()
        }
    }
}

/// Runs a parsed command.
pub fn run(cli: Cli) -> std::result::Result<(), CliError> {
    match cli.command {
        Command::Analyze { params, output } => {
            let rows = analyze_rows(&params.to_params()?)?;
            emit(&render(&rows, output.format.unwrap_or(Format::Json)), output.out.as_ref())?;
        }
        Command::Simulate { params, sim, trials, output } => {
            let req = SimulateRequest {
                params: params.to_params()?,
                n: sim.n,
                trials,
                seed: sim.seed,
                method: sim.method.into(),
                opts: sim.opts(),
                format: output.format.unwrap_or(Format::Json),
            };
            emit(&simulate_output(&req)?, output.out.as_ref())?;
        }
        Command::Sweep { params, grid, sim, trials, target_pb, output } => {
            let req = SweepRequest {
                base: params.to_params()?,
                param: grid.param,
                values: grid_values(&grid)?,
                target_pb,
                n: sim.n,
                trials,
                seed: sim.seed,
                method: sim.method.into(),
                opts: sim.opts(),
            };
            emit(&render(&sweep_rows(&req)?, output.format.unwrap_or(Format::Csv)), output.out.as_ref())?;
        }
        Command::TuneRho { params, target_pb, tol, output } => {
            let rows = tune_rows(&params.to_params()?, target_pb, tol)?;
            emit(&render(&rows, output.format.unwrap_or(Format::Json)), output.out.as_ref())?;
        }
        Command::Validate { quick, perturb_beta, out } => {
            let opts = ValidationOptions { quick, perturb_beta };
            let ids: &[u8] = if quick { &validation::QUICK } else { &validation::ALL };
            let mut text = String::new();
            let mut failed = 0;
            for &id in ids {
                let outcome = validation::evaluate(id, &opts);
                failed += usize::from(!outcome.passed());
                let line = format!("{outcome}\n");
                if out.is_none() {
                    emit(&line, None)?;
                }
                text.push_str(&line);
            }
            let summary = format!("{} of {} criteria passed\n", ids.len() - failed, ids.len());
            text.push_str(&summary);
            match &out {
                Some(path) => emit(&text, Some(path))?,
                None => emit(&summary, None)?,
            }
            if failed > 0 {
                return Err(CliError::ValidationFailed(failed));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_keeps_twelve_digits() {
        assert_eq!(round12(0.123_456_789_012_345_6), 0.123_456_789_012);
        assert_eq!(round12(0.0), 0.0);
        assert!(round12(f64::INFINITY).is_infinite());
        assert_eq!(num_text(1e-20), "1e-20");
    }

    #[test]
    fn json_and_csv_carry_the_same_numbers() {
        let p = SystemParams::with_sigma(2.0, 1.0, 0.0, 100.0, 0.1).unwrap();
        let rows = analyze_rows(&p).unwrap();
        let json: Value = serde_json::from_str(&render(&rows, Format::Json)).unwrap();
        let csv = render(&rows, Format::Csv);
        let mut lines = csv.lines();
        let header: Vec<&str> = lines.next().unwrap().split(',').collect();
        let values: Vec<&str> = lines.next().unwrap().split(',').collect();
        for (k, v) in header.iter().zip(values) {
            assert_eq!(json[*k].as_f64().unwrap(), v.parse::<f64>().unwrap(), "{k}");
        }
        assert!((json["pb_star"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn json_round_trips() {
        let p = SystemParams::with_sigma(1.5, 1.0, 0.01, 1.0, 0.1).unwrap();
        let text = render(&analyze_rows(&p).unwrap(), Format::Json);
        let v: Value = serde_json::from_str(&text).unwrap();
        let again = serde_json::to_string_pretty(&v).unwrap() + "\n";
        assert_eq!(again, text);
    }

    #[test]
    fn grids() {
        let g = |values: Option<Vec<f64>>, from, to, steps, log| GridArgs { param: SweepParam::Rho, values, from, to, steps, log };
        assert_eq!(grid_values(&g(Some(vec![1.0, 2.0]), None, None, None, false)).unwrap(), vec![1.0, 2.0]);
        let lin = grid_values(&g(None, Some(0.0), Some(1.0), Some(5), false)).unwrap();
        assert_eq!(lin, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let log = grid_values(&g(None, Some(0.01), Some(100.0), Some(5), true)).unwrap();
        assert!((log[2] - 1.0).abs() < 1e-12);
        assert!(grid_values(&g(None, Some(-1.0), Some(1.0), Some(3), true)).is_err());
        assert!(grid_values(&g(None, None, None, None, false)).is_err());
    }

    #[test]
    fn sweep_marks_infeasible_points() {
        let base = SystemParams::with_sigma(1.5, 1.0, 0.0, 1.0, 0.1).unwrap();
        let req = SweepRequest {
            base,
            param: SweepParam::Delta,
            values: vec![0.5, 2.0],
            target_pb: None,
            n: 16,
            trials: 0,
            seed: 0,
            method: Method::LimitedPapr,
            opts: SolverOptions::default(),
        };
        let rows = sweep_rows(&req).unwrap();
        assert_eq!(rows[0].last().unwrap().1, Cell::Text("infeasible".into()));
        assert_eq!(rows[1].last().unwrap().1, Cell::Text("ok".into()));
        let all_bad = SweepRequest { values: vec![0.5, 0.9], ..req };
        assert!(matches!(sweep_rows(&all_bad), Err(Error::Infeasible(_))));
    }

    #[test]
    fn single_point_sweep_matches_analyze() {
        let base = SystemParams::with_sigma(1.5, 1.0, 0.01, 1.0, 0.1).unwrap();
        let req = SweepRequest {
            base,
            param: SweepParam::Rho,
            values: vec![1.0],
            target_pb: None,
            n: 16,
            trials: 0,
            seed: 0,
            method: Method::LimitedPapr,
            opts: SolverOptions::default(),
        };
        let sweep = &sweep_rows(&req).unwrap()[0];
        let analyze = &analyze_rows(&base).unwrap()[0];
        for (k, c) in sweep {
            if let Some((_, a)) = analyze.iter().find(|(ka, _)| ka == k) {
                assert_eq!(cell_csv(a), cell_csv(c), "{k}");
            }
        }
    }
}
