//! Command-line front end for `alm_dividends`.
//!
//! Subcommands: `barriers`, `value`, `simulate`, `sweep`, `verify`.
//! Parameters come from a flat `key = value` file (`--config`) and/or
//! flags named after the parameter keys (`--mu_A`, `--sigma_L`, ...); flags
//! win. The effective parameter set is echoed as `# key=value` comment lines
//! at the top of every output. Numbers are printed with 17 significant
//! digits.
//!
//! Exit codes: 0 success, 1 invalid input, 2 domain error, 3 numerical
//! failure, 4 I/O error, 5 verification failed.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use alm_dividends::closed_form::constrained_value_function;
use alm_dividends::injections::optimal_injection_value;
use alm_dividends::output::sig17;
use alm_dividends::params::{parse_key_values, FIELD_NAMES};
use alm_dividends::sweep::{beta2_vs_kappa, breakeven_sweep, linspace, value_surface};
use alm_dividends::verify::{check_injection_lemma_with, check_solvency_lemma_with, CheckOptions};
use alm_dividends::{
    constrained_barrier_beta1, exponents, optimal_barrier_beta0, optimal_barrier_beta2,
    paired_compare, simulate_paths, ClosedFormValue, DoubleBarrierValue, Error, ModelParams,
    Policy, SimConfig, ValueFunction, VerificationReport,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error as ThisError;

#[derive(Debug, Parser)]
#[command(
    name = "almdiv",
    version,
    about = "Optimal dividend barriers for asset/liability funds"
)]
pub struct Cli {
    #[command(flatten)]
    pub params: ParamArgs,

    /// Write to this file instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    /// Output format; each subcommand has its own default.
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Keyvalue,
}

#[derive(Debug, Default, Args)]
pub struct ParamArgs {
    /// Flat `key = value` parameter file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long = "mu_A", global = true, allow_negative_numbers = true)]
    pub mu_a: Option<f64>,
    #[arg(long = "mu_L", global = true, allow_negative_numbers = true)]
    pub mu_l: Option<f64>,
    #[arg(long = "sigma_A", global = true)]
    pub sigma_a: Option<f64>,
    #[arg(long = "sigma_L", global = true)]
    pub sigma_l: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub rho: Option<f64>,
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    #[arg(long, global = true)]
    pub alpha0: Option<f64>,
    #[arg(long, global = true)]
    pub alpha1: Option<f64>,
    #[arg(long, global = true)]
    pub kappa: Option<f64>,
}

impl ParamArgs {
    fn flags(&self) -> [(&'static str, Option<f64>); 9] {
        [
            ("mu_A", self.mu_a),
            ("mu_L", self.mu_l),
            ("sigma_A", self.sigma_a),
            ("sigma_L", self.sigma_l),
            ("rho", self.rho),
            ("delta", self.delta),
            ("alpha0", self.alpha0),
            ("alpha1", self.alpha1),
            ("kappa", self.kappa),
        ]
    }

    /// File values overridden by flags, then validated.
    pub fn resolve(&self) -> Result<ModelParams, CliError> {
        let mut map = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                parse_key_values(&text)
                    .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?
            }
            None => BTreeMap::new(),
        };
        for (key, value) in self.flags() {
            if let Some(v) = value {
                map.insert(key.to_string(), v);
            }
        }
        let p = ModelParams::from_map(&map).map_err(|e| CliError::Invalid(e.to_string()))?;
        Ok(p.validate().map_err(Error::from)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProblemKind {
    Unconstrained,
    Solvency,
    Injection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyKind {
    Unconstrained,
    Solvency,
    DoubleBarrier,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepKind {
    Beta2VsKappa,
    ValueSurface,
    Breakeven,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VerifyKind {
    Solvency,
    Injection,
    Both,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal barriers, characteristic exponents and barrier values.
    Barriers,
    /// Value function, active branch and first partials at a point.
    Value(ValueArgs),
    /// Monte Carlo simulation of a dividend policy.
    Simulate(SimulateArgs),
    /// Parameter sweeps as CSV.
    Sweep(SweepArgs),
    /// Numerical check of the optimality conditions.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct ValueArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub x1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub x2: f64,
    #[arg(long, value_enum, default_value = "unconstrained")]
    pub problem: ProblemKind,
    /// Multiplies both coordinates.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
}

#[derive(Debug, Clone, Args)]
pub struct PolicyArgs {
    #[arg(long, value_enum, default_value = "unconstrained")]
    pub policy: PolicyKind,
    /// Dividend barrier; defaults to the optimum for the policy.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Injection barrier; defaults to alpha0.
    #[arg(long)]
    pub gamma: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub policy: PolicyArgs,
    /// Initial assets; defaults to the dividend barrier times x2_0.
    #[arg(long = "x1_0")]
    pub x1_0: Option<f64>,
    #[arg(long = "x2_0", default_value_t = 1.0)]
    pub x2_0: f64,
    #[arg(long, default_value_t = 0.004)]
    pub dt: f64,
    #[arg(long = "horizon_T", default_value_t = 300.0)]
    pub horizon_t: f64,
    #[arg(long = "n_paths", default_value_t = 10_000)]
    pub n_paths: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub antithetic: bool,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Also run a second policy on the same random numbers.
    #[arg(long)]
    pub paired: bool,
    #[arg(long = "policy-b", value_enum, default_value = "solvency")]
    pub policy_b: PolicyKind,
    #[arg(long = "beta-b")]
    pub beta_b: Option<f64>,
    #[arg(long = "gamma-b")]
    pub gamma_b: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub kind: SweepKind,
    /// Start of the kappa (or risk parameter) range.
    #[arg(long, allow_negative_numbers = true)]
    pub from: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub to: Option<f64>,
    #[arg(long, default_value_t = 50)]
    pub points: usize,
    /// Parameter swept by `breakeven`.
    #[arg(long = "risk-param", default_value = "sigma_A")]
    pub risk_param: String,
    #[arg(long = "gamma-from")]
    pub gamma_from: Option<f64>,
    #[arg(long = "gamma-to")]
    pub gamma_to: Option<f64>,
    #[arg(long = "gamma-points", default_value_t = 11)]
    pub gamma_points: usize,
    #[arg(long = "beta-from")]
    pub beta_from: Option<f64>,
    #[arg(long = "beta-to")]
    pub beta_to: Option<f64>,
    #[arg(long = "beta-points", default_value_t = 50)]
    pub beta_points: usize,
    /// Funding ratio at which the surface is evaluated; defaults to alpha0.
    #[arg(long)]
    pub ratio: Option<f64>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value = "both")]
    pub problem: VerifyKind,
    /// Check this dividend barrier instead of the optimal one.
    #[arg(long = "barrier-override")]
    pub barrier_override: Option<f64>,
    #[arg(long, default_value_t = alm_dividends::verify::DEFAULT_GRID_POINTS)]
    pub points: usize,
}

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error("{0}")]
    Usage(#[from] clap::Error),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("{0}")]
    Domain(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("verification failed")]
    VerificationFailed,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(e) if !e.use_stderr() => 0,
            CliError::Usage(_) | CliError::Invalid(_) => 1,
            CliError::Domain(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
            CliError::VerificationFailed => 5,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Param(_) | Error::MissingParameter(_) | Error::Config(_) | Error::EmptyInput => {
                CliError::Invalid(msg)
            }
            Error::Domain(_) | Error::Seam { .. } => CliError::Domain(msg),
            Error::BracketFailure { .. }
            | Error::NoBreakeven(_)
            | Error::MonotonicityViolated(_) => CliError::Numerical(msg),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Parses `args` (including the program name) and runs the command,
/// writing to `stdout` unless `--output` is given.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    match &cli.output {
        Some(path) => {
            let file =
                File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            let mut w = BufWriter::new(file);
            let r = execute(&cli, &mut w);
            w.flush()?;
            r
        }
        None => execute(&cli, stdout),
    }
}

pub fn execute(cli: &Cli, w: &mut dyn Write) -> Result<(), CliError> {
    let p = cli.params.resolve()?;
    for key in FIELD_NAMES {
        if let Some(v) = p.get(key) {
            writeln!(w, "# {key}={}", sig17(v))?;
        }
    }
    match &cli.command {
        Command::Barriers => cmd_barriers(&p, fmt_or(cli, Format::Keyvalue), w),
        Command::Value(a) => cmd_value(&p, a, fmt_or(cli, Format::Keyvalue), w),
        Command::Simulate(a) => cmd_simulate(&p, a, fmt_or(cli, Format::Csv), w),
        Command::Sweep(a) => match fmt_or(cli, Format::Csv) {
            Format::Csv => cmd_sweep(&p, a, w),
            Format::Keyvalue => Err(CliError::Invalid("sweep output is CSV only".into())),
        },
        Command::Verify(a) => cmd_verify(&p, a, fmt_or(cli, Format::Keyvalue), w),
    }
}

fn fmt_or(cli: &Cli, default: Format) -> Format {
    cli.format.unwrap_or(default)
}

/// Ordered `(key, value)` pairs rendered as `key=value` lines or as a
/// two-column CSV.
struct Block(Vec<(String, String)>);

impl Block {
    fn new() -> Self {
        Block(Vec::new())
    }

    fn num(&mut self, key: &str, v: f64) {
        self.0.push((key.to_string(), sig17(v)));
    }

    fn text(&mut self, key: &str, v: &str) {
        self.0.push((key.to_string(), v.to_string()));
    }

    fn write(&self, format: Format, w: &mut dyn Write) -> io::Result<()> {
        if format == Format::Csv {
            writeln!(w, "quantity,value")?;
        }
        let sep = if format == Format::Csv { ',' } else { '=' };
        for (k, v) in &self.0 {
            writeln!(w, "{k}{sep}{v}")?;
        }
        Ok(())
    }
}

pub fn cmd_barriers(p: &ModelParams, format: Format, w: &mut dyn Write) -> Result<(), CliError> {
    let e = exponents(p);
    let mut b = Block::new();
    b.num("sigma_tilde_sq", e.sigma_tilde_sq);
    b.num("zeta1", e.zeta1);
    b.num("zeta2", e.zeta2);
    let b0 = optimal_barrier_beta0(p);
    b.num("beta0", b0);
    b.num(
        "value_at_beta0",
        ClosedFormValue::new(b0, p)?.value_at_barrier(),
    );
    if p.alpha1.is_some() {
        let f = constrained_value_function(p)?;
        b.num("beta1", constrained_barrier_beta1(p)?);
        b.num("value_at_beta1", f.value_at_barrier());
    }
    if p.kappa.is_some() {
        let f = optimal_injection_value(p)?;
        b.num("beta2", f.beta);
        b.num("gamma", p.alpha0);
        b.num("value_at_beta2", f.value_at_dividend_barrier());
    }
    b.write(format, w)?;
    Ok(())
}

fn value_function(
    p: &ModelParams,
    problem: ProblemKind,
) -> Result<(Box<dyn ValueFunction>, f64), CliError> {
    Ok(match problem {
        ProblemKind::Unconstrained => {
            let b0 = optimal_barrier_beta0(p);
            (Box::new(ClosedFormValue::new(b0, p)?), b0)
        }
        ProblemKind::Solvency => {
            let f = constrained_value_function(p)?;
            let beta = f.beta;
            (Box::new(f), beta)
        }
        ProblemKind::Injection => {
            let f = optimal_injection_value(p)?;
            let beta = f.beta;
            (Box::new(f), beta)
        }
    })
}

pub fn cmd_value(
    p: &ModelParams,
    a: &ValueArgs,
    format: Format,
    w: &mut dyn Write,
) -> Result<(), CliError> {
    let (f, beta) = value_function(p, a.problem)?;
    let (x1, x2) = (a.x1 * a.scale, a.x2 * a.scale);
    let d = f.partials(x1, x2)?;
    let mut b = Block::new();
    b.text("problem", a.problem.to_possible_value().unwrap().get_name());
    b.num("barrier", beta);
    if a.problem == ProblemKind::Injection {
        b.num("gamma", p.alpha0);
    }
    b.num("x1", x1);
    b.num("x2", x2);
    b.num("value", d.value);
    b.text("branch", f.branch(x1, x2)?.label());
    b.num("d_dx1", d.d1);
    b.num("d_dx2", d.d2);
    b.write(format, w)?;
    Ok(())
}

/// The policy named on the command line, with its defaults filled in.
pub fn build_policy(
    p: &ModelParams,
    kind: PolicyKind,
    beta: Option<f64>,
    gamma: Option<f64>,
) -> Result<Policy, CliError> {
    Ok(match kind {
        PolicyKind::Unconstrained => Policy::UnconstrainedBarrier {
            beta: beta.unwrap_or_else(|| optimal_barrier_beta0(p)),
        },
        PolicyKind::Solvency => {
            let alpha1 = p.alpha1.ok_or(Error::MissingParameter("alpha1"))?;
            let beta = match beta {
                Some(b) => b,
                None => constrained_barrier_beta1(p)?,
            };
            Policy::SolvencyConstrained { beta, alpha1 }
        }
        PolicyKind::DoubleBarrier => {
            let gamma = gamma.unwrap_or(p.alpha0);
            let beta = match beta {
                Some(b) => b,
                None => optimal_barrier_beta2(p)?,
            };
            Policy::DoubleBarrier { beta, gamma }
        }
    })
}

/// Closed-form value of following `policy` from `(x1, x2)`.
pub fn policy_value(policy: &Policy, x1: f64, x2: f64, p: &ModelParams) -> Result<f64, CliError> {
    Ok(match *policy {
        Policy::UnconstrainedBarrier { beta } | Policy::SolvencyConstrained { beta, .. } => {
            ClosedFormValue::new(beta, p)?.value(x1, x2)?
        }
        Policy::DoubleBarrier { beta, gamma } => {
            DoubleBarrierValue::new(beta, gamma, p)?.value(x1, x2)?
        }
    })
}

pub fn cmd_simulate(
    p: &ModelParams,
    a: &SimulateArgs,
    format: Format,
    w: &mut dyn Write,
) -> Result<(), CliError> {
    let policy = build_policy(p, a.policy.policy, a.policy.beta, a.policy.gamma)?;
    let x1_0 = a.x1_0.unwrap_or(policy.beta() * a.x2_0);
    let mut cfg = SimConfig::new(x1_0, a.x2_0, a.dt, a.horizon_t, a.n_paths, a.seed);
    cfg.antithetic = a.antithetic;
    cfg.workers = a.workers;

    let mut b = Block::new();
    b.text("policy", policy.label());
    b.num("beta", policy.beta());
    b.num("x1_0", x1_0);
    b.num("x2_0", a.x2_0);
    b.num("dt", a.dt);
    b.text("seed", &a.seed.to_string());

    if a.paired {
        let other = build_policy(p, a.policy_b, a.beta_b, a.gamma_b)?;
        let res = paired_compare(&cfg, &policy, &other, p)?;
        if format == Format::Csv {
            res.write_csv(&mut *w)?;
            writeln!(w)?;
        }
        b.text("policy_b", other.label());
        b.num("beta_b", other.beta());
        for (k, v) in [("a", &res.a.summary), ("b", &res.b.summary)] {
            for line in v.to_string().lines() {
                if let Some((key, val)) = line.split_once('=') {
                    b.text(&format!("{k}.{key}"), val);
                }
            }
        }
        for line in res.to_string().lines() {
            if let Some((key, val)) = line.split_once('=') {
                b.text(key, val);
            }
        }
    } else {
        let res = simulate_paths(&cfg, &policy, p)?;
        if format == Format::Csv {
            res.write_csv(&mut *w)?;
            writeln!(w)?;
        }
        for line in res.summary.to_string().lines() {
            if let Some((key, val)) = line.split_once('=') {
                b.text(key, val);
            }
        }
        let cf = policy_value(&policy, x1_0, a.x2_0, p)?;
        let s = res.summary.net_value;
        b.num("closed_form", cf);
        b.num("z_score", (s.mean - cf) / s.std_error);
    }
    for (k, v) in &b.0 {
        writeln!(w, "{k}={v}")?;
    }
    Ok(())
}

fn need(v: Option<f64>, default: Option<f64>, name: &str) -> Result<f64, CliError> {
    v.or(default)
        .ok_or_else(|| CliError::Invalid(format!("--{name} is required")))
}

pub fn cmd_sweep(p: &ModelParams, a: &SweepArgs, w: &mut dyn Write) -> Result<(), CliError> {
    match a.kind {
        SweepKind::Beta2VsKappa => {
            let ks = linspace(
                need(a.from, Some(1.001), "from")?,
                need(a.to, Some(3.0), "to")?,
                a.points,
            );
            writeln!(w, "kappa,beta2")?;
            for (k, b) in beta2_vs_kappa(p, &ks)? {
                writeln!(w, "{},{}", sig17(k), sig17(b))?;
            }
        }
        SweepKind::ValueSurface => {
            let gammas = linspace(
                need(a.gamma_from, Some(p.alpha0), "gamma-from")?,
                need(a.gamma_to, Some(2.0 * p.alpha0), "gamma-to")?,
                a.gamma_points,
            );
            let b0 = optimal_barrier_beta0(p);
            let betas = linspace(
                need(a.beta_from, Some(1.1 * p.alpha0), "beta-from")?,
                need(a.beta_to, Some(2.0 * b0), "beta-to")?,
                a.beta_points,
            );
            let ratio = a.ratio.unwrap_or(p.alpha0);
            writeln!(w, "gamma,beta,value")?;
            for c in value_surface(p, &gammas, &betas, ratio)? {
                let v = c.value.map(sig17).unwrap_or_default();
                writeln!(w, "{},{},{v}", sig17(c.gamma), sig17(c.beta))?;
            }
        }
        SweepKind::Breakeven => {
            let current = p.get(&a.risk_param);
            let values = linspace(
                need(a.from, current.map(|v| 0.5 * v), "from")?,
                need(a.to, current, "to")?,
                a.points,
            );
            writeln!(w, "{},kappa_star,beta2", a.risk_param)?;
            for r in breakeven_sweep(p, &a.risk_param, &values)? {
                writeln!(w, "{},{},{}", sig17(r.risk), sig17(r.kappa), sig17(r.beta2))?;
            }
        }
    }
    Ok(())
}

fn write_report(r: &VerificationReport, format: Format, w: &mut dyn Write) -> io::Result<()> {
    match format {
        Format::Keyvalue => writeln!(w, "{r}"),
        Format::Csv => {
            for c in &r.conditions {
                writeln!(
                    w,
                    "{},{},{},{},{},{}",
                    r.problem.label(),
                    c.id,
                    sig17(c.worst_violation),
                    sig17(c.location),
                    sig17(c.tolerance),
                    if c.passed { "pass" } else { "fail" }
                )?;
            }
            Ok(())
        }
    }
}

pub fn cmd_verify(
    p: &ModelParams,
    a: &VerifyArgs,
    format: Format,
    w: &mut dyn Write,
) -> Result<(), CliError> {
    let opts = CheckOptions {
        barrier_override: a.barrier_override,
        points: a.points,
        ..CheckOptions::default()
    };
    let (solvency, injection) = match a.problem {
        VerifyKind::Solvency => (true, false),
        VerifyKind::Injection => (false, true),
        VerifyKind::Both => (p.alpha1.is_some(), p.kappa.is_some()),
    };
    if !solvency && !injection {
        return Err(CliError::Invalid(
            "verify needs alpha1 (solvency) and/or kappa (injection)".into(),
        ));
    }
    let mut reports = Vec::new();
    if solvency {
        reports.push(check_solvency_lemma_with(p, opts)?);
    }
    if injection {
        reports.push(check_injection_lemma_with(p, opts)?);
    }
    if format == Format::Csv {
        writeln!(
            w,
            "problem,condition,worst_violation,location,tolerance,status"
        )?;
    }
    for r in &reports {
        write_report(r, format, w)?;
    }
    if reports.iter().all(|r| r.passed) {
        Ok(())
    } else {
        Err(CliError::VerificationFailed)
    }
}
