//! Seedable Monte Carlo for the controlled asset/liability process.
//!
//! Between grid times the pair `(X1, X2)` is advanced with exact lognormal
//! increments, so the only discretization error comes from applying the
//! controls (dividends, injections, ruin detection) at grid times only.
//! Internally the state is `(ln Y, ln X2)`; barrier tests then need no
//! transcendental calls and `exp` is only evaluated when a control fires.
//!
//! Path `i` draws from ChaCha8 stream `i` keyed by the master seed, and
//! results are collected by index, so output is bit-identical for any
//! worker count. Two runs with the same configuration share their Brownian
//! increments, which is what [`paired_compare`] relies on.

use std::fmt;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::output::sig17;
use crate::params::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Policy {
    /// Pay the overshoot above `beta`.
    UnconstrainedBarrier { beta: f64 },
    /// Pay the overshoot above `beta`, never paying while `Y < alpha1` nor
    /// paying an amount that takes `Y` below `alpha1`.
    SolvencyConstrained { beta: f64, alpha1: f64 },
    /// Pay the overshoot above `beta` and inject capital (at cost `kappa`
    /// per unit) to lift `Y` back to `gamma` whenever it drops below.
    DoubleBarrier { beta: f64, gamma: f64 },
}

impl Policy {
    pub fn label(&self) -> &'static str {
        match self {
            Policy::UnconstrainedBarrier { .. } => "unconstrained",
            Policy::SolvencyConstrained { .. } => "solvency",
            Policy::DoubleBarrier { .. } => "double-barrier",
        }
    }

    pub fn beta(&self) -> f64 {
        match *self {
            Policy::UnconstrainedBarrier { beta }
            | Policy::SolvencyConstrained { beta, .. }
            | Policy::DoubleBarrier { beta, .. } => beta,
        }
    }

    fn validate(&self, p: &ModelParams) -> Result<()> {
        let finite = |x: f64, name: &str| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be finite (got {x})")))
            }
        };
        match *self {
            Policy::UnconstrainedBarrier { beta } => {
                finite(beta, "beta")?;
                if beta <= p.alpha0 {
                    return Err(Error::Config(format!(
                        "barrier {beta} must exceed the ruin level {}",
                        p.alpha0
                    )));
                }
            }
            Policy::SolvencyConstrained { beta, alpha1 } => {
                finite(beta, "beta")?;
                finite(alpha1, "alpha1")?;
                if !(alpha1 > p.alpha0 && beta >= alpha1) {
                    return Err(Error::Config(format!(
                        "need beta >= alpha1 > alpha0 (beta = {beta}, alpha1 = {alpha1}, alpha0 = {})",
                        p.alpha0
                    )));
                }
            }
            Policy::DoubleBarrier { beta, gamma } => {
                finite(beta, "beta")?;
                finite(gamma, "gamma")?;
                if !(p.alpha0 <= gamma && gamma < beta) {
                    return Err(Error::Config(format!(
                        "need alpha0 <= gamma < beta (alpha0 = {}, gamma = {gamma}, beta = {beta})",
                        p.alpha0
                    )));
                }
                if p.kappa.is_none() {
                    return Err(Error::Config(
                        "the double-barrier policy needs kappa".to_string(),
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub x1_0: f64,
    pub x2_0: f64,
    /// Time step in years.
    pub dt: f64,
    /// Censoring horizon in years.
    pub horizon: f64,
    pub n_paths: usize,
    pub seed: u64,
    /// Pair path `2k + 1` with the negated increments of path `2k`.
    pub antithetic: bool,
    /// Worker threads; 0 uses the global rayon pool.
    pub workers: usize,
}

impl SimConfig {
    pub fn new(x1_0: f64, x2_0: f64, dt: f64, horizon: f64, n_paths: usize, seed: u64) -> Self {
        Self {
            x1_0,
            x2_0,
            dt,
            horizon,
            n_paths,
            seed,
            antithetic: false,
            workers: 0,
        }
    }

    /// Number of grid steps; the effective horizon is `steps() * dt`.
    pub fn steps(&self) -> u64 {
        (self.horizon / self.dt - 1e-9).ceil().max(1.0) as u64
    }

    fn validate(&self, p: &ModelParams) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!(
                "dt must be positive (got {})",
                self.dt
            )));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Config(format!(
                "horizon must be positive (got {})",
                self.horizon
            )));
        }
        if self.n_paths == 0 {
            return Err(Error::Config("n_paths must be at least 1".to_string()));
        }
        if !(self.x2_0 > 0.0 && self.x2_0.is_finite() && self.x1_0.is_finite()) {
            return Err(Error::Config(format!(
                "need finite x1_0 and x2_0 > 0 (got x1_0 = {}, x2_0 = {})",
                self.x1_0, self.x2_0
            )));
        }
        if self.x1_0 / self.x2_0 < p.alpha0 {
            return Err(Error::Config(format!(
                "initial funding ratio {} is below the ruin level {}",
                self.x1_0 / self.x2_0,
                p.alpha0
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathOutcome {
    /// Discounted dividends.
    pub pv_dividends: f64,
    /// Discounted injected capital, before the cost factor.
    pub pv_injections: f64,
    /// Ruin time, or the effective horizon if censored.
    pub ruin_time: f64,
    pub censored: bool,
}

/// Sample moments. `cv` is NaN when the mean is not positive; `std_error`
/// is computed from pair means under antithetic sampling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleStats {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub std_dev: f64,
    pub cv: f64,
    pub std_error: f64,
}

/// Mean, unbiased variance (NaN for a single value), CV and standard error.
pub fn sample_stats(xs: &[f64]) -> Result<SampleStats> {
    if xs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = xs.len();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let variance = if n > 1 {
        xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64
    } else {
        f64::NAN
    };
    let std_dev = variance.sqrt();
    Ok(SampleStats {
        n,
        mean,
        variance,
        std_dev,
        cv: if mean > 0.0 { std_dev / mean } else { f64::NAN },
        std_error: std_dev / (n as f64).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub pv_dividends: SampleStats,
    pub pv_injections: SampleStats,
    /// `pv_dividends - kappa * pv_injections`.
    pub net_value: SampleStats,
    pub kappa: f64,
    pub ruin_fraction: f64,
    /// Mean ruin time with censored paths counted at the horizon.
    pub censored_ruin_mean: f64,
    pub horizon: f64,
}

/// Summarizes per-path outcomes. `kappa` weighs injections in the net value.
pub fn summarize(paths: &[PathOutcome], kappa: f64, horizon: f64) -> Result<Summary> {
    if paths.is_empty() {
        return Err(Error::EmptyInput);
    }
    let div: Vec<f64> = paths.iter().map(|o| o.pv_dividends).collect();
    let inj: Vec<f64> = paths.iter().map(|o| o.pv_injections).collect();
    let net: Vec<f64> = paths
        .iter()
        .map(|o| o.pv_dividends - kappa * o.pv_injections)
        .collect();
    let n = paths.len() as f64;
    let ruined = paths.iter().filter(|o| !o.censored).count() as f64;
    let censored_ruin_mean = paths
        .iter()
        .map(|o| if o.censored { horizon } else { o.ruin_time })
        .sum::<f64>()
        / n;
    Ok(Summary {
        pv_dividends: sample_stats(&div)?,
        pv_injections: sample_stats(&inj)?,
        net_value: sample_stats(&net)?,
        kappa,
        ruin_fraction: ruined / n,
        censored_ruin_mean,
        horizon,
    })
}

/// Standard error of the mean from the means of consecutive pairs; a
/// trailing unpaired value is dropped.
fn pair_std_error(xs: &[f64]) -> f64 {
    let pairs: Vec<f64> = xs.chunks_exact(2).map(|c| 0.5 * (c[0] + c[1])).collect();
    match sample_stats(&pairs) {
        Ok(s) => s.std_error,
        Err(_) => f64::NAN,
    }
}

fn write_stats(f: &mut fmt::Formatter<'_>, prefix: &str, s: &SampleStats) -> fmt::Result {
    writeln!(f, "{prefix}_mean={}", sig17(s.mean))?;
    writeln!(f, "{prefix}_variance={}", sig17(s.variance))?;
    writeln!(f, "{prefix}_std_dev={}", sig17(s.std_dev))?;
    writeln!(f, "{prefix}_cv={}", sig17(s.cv))?;
    writeln!(f, "{prefix}_std_error={}", sig17(s.std_error))
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n_paths={}", self.pv_dividends.n)?;
        write_stats(f, "pv_dividends", &self.pv_dividends)?;
        write_stats(f, "pv_injections", &self.pv_injections)?;
        write_stats(f, "net_value", &self.net_value)?;
        writeln!(f, "kappa={}", sig17(self.kappa))?;
        writeln!(f, "ruin_fraction={}", sig17(self.ruin_fraction))?;
        writeln!(f, "censored_ruin_mean={}", sig17(self.censored_ruin_mean))?;
        write!(f, "horizon={}", sig17(self.horizon))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub paths: Vec<PathOutcome>,
    pub summary: Summary,
}

impl SimResult {
    /// Per-path CSV with a header row.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(
            w,
            "path_index,pv_dividends,pv_injections,ruin_time,censored"
        )?;
        for (i, o) in self.paths.iter().enumerate() {
            writeln!(
                w,
                "{i},{},{},{},{}",
                sig17(o.pv_dividends),
                sig17(o.pv_injections),
                sig17(o.ruin_time),
                u8::from(o.censored)
            )?;
        }
        Ok(())
    }
}

/// A control applied at a grid time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlEvent {
    pub time: f64,
    pub ratio_before: f64,
    pub ratio_after: f64,
    /// Undiscounted dividend (positive) or injection (negative).
    pub amount: f64,
}

/// Everything a path needs, precomputed once per run.
struct Engine {
    steps: u64,
    dt: f64,
    delta: f64,
    ly0: f64,
    l20: f64,
    drift_y: f64,
    drift_2: f64,
    y_z1: f64,
    y_z2: f64,
    x2_z1: f64,
    x2_z2: f64,
    beta: f64,
    ln_beta: f64,
    /// Dividends are only paid at or above this ratio.
    ln_pay_floor: f64,
    gamma: Option<(f64, f64)>,
    ln_alpha0: f64,
    horizon: f64,
}

impl Engine {
    fn new(cfg: &SimConfig, policy: &Policy, p: &ModelParams) -> Self {
        let sq = cfg.dt.sqrt();
        let ortho = (1.0 - p.rho * p.rho).sqrt();
        let drift_1 = (p.mu_a - 0.5 * p.sigma_a * p.sigma_a) * cfg.dt;
        let drift_2 = (p.mu_l - 0.5 * p.sigma_l * p.sigma_l) * cfg.dt;
        let x2_z1 = p.sigma_l * p.rho * sq;
        let x2_z2 = p.sigma_l * ortho * sq;
        let (pay_floor, gamma) = match *policy {
            Policy::UnconstrainedBarrier { .. } => (0.0, None),
            Policy::SolvencyConstrained { alpha1, .. } => (alpha1, None),
            Policy::DoubleBarrier { gamma, .. } => (0.0, Some((gamma, gamma.ln()))),
        };
        let beta = policy.beta();
        let steps = cfg.steps();
        Self {
            steps,
            dt: cfg.dt,
            delta: p.delta,
            ly0: (cfg.x1_0 / cfg.x2_0).ln(),
            l20: cfg.x2_0.ln(),
            drift_y: drift_1 - drift_2,
            drift_2,
            y_z1: p.sigma_a * sq - x2_z1,
            y_z2: -x2_z2,
            x2_z1,
            x2_z2,
            beta,
            ln_beta: beta.ln(),
            ln_pay_floor: pay_floor.ln(),
            gamma,
            ln_alpha0: p.alpha0.ln(),
            horizon: steps as f64 * cfg.dt,
        }
    }

    /// Injection, then ruin, then dividend. Returns `false` on ruin.
    fn control<O: FnMut(ControlEvent)>(
        &self,
        k: u64,
        ly: &mut f64,
        l2: f64,
        out: &mut PathOutcome,
        observe: &mut O,
    ) -> bool {
        let t = k as f64 * self.dt;
        if let Some((gamma, ln_gamma)) = self.gamma {
            if *ly < ln_gamma {
                let amount = l2.exp() * gamma * -(*ly - ln_gamma).exp_m1();
                out.pv_injections += (-self.delta * t).exp() * amount;
                observe(ControlEvent {
                    time: t,
                    ratio_before: ly.exp(),
                    ratio_after: gamma,
                    amount: -amount,
                });
                *ly = ln_gamma;
            }
        } else if *ly <= self.ln_alpha0 {
            out.ruin_time = t;
            out.censored = false;
            return false;
        }
        if *ly > self.ln_beta && *ly >= self.ln_pay_floor {
            let amount = l2.exp() * self.beta * (*ly - self.ln_beta).exp_m1();
            out.pv_dividends += (-self.delta * t).exp() * amount;
            observe(ControlEvent {
                time: t,
                ratio_before: ly.exp(),
                ratio_after: self.beta,
                amount,
            });
            *ly = self.ln_beta;
        }
        true
    }

    fn run<O: FnMut(ControlEvent)>(
        &self,
        rng: &mut ChaCha8Rng,
        sign: f64,
        mut observe: O,
    ) -> PathOutcome {
        let mut out = PathOutcome {
            pv_dividends: 0.0,
            pv_injections: 0.0,
            ruin_time: self.horizon,
            censored: true,
        };
        let (mut ly, mut l2) = (self.ly0, self.l20);
        if !self.control(0, &mut ly, l2, &mut out, &mut observe) {
            return out;
        }
        for k in 1..=self.steps {
            let z1: f64 = sign * rng.sample::<f64, _>(StandardNormal);
            let z2: f64 = sign * rng.sample::<f64, _>(StandardNormal);
            ly += self.drift_y + self.y_z1 * z1 + self.y_z2 * z2;
            l2 += self.drift_2 + self.x2_z1 * z1 + self.x2_z2 * z2;
            if !self.control(k, &mut ly, l2, &mut out, &mut observe) {
                break;
            }
        }
        out
    }
}

/// RNG for path `index`: stream `index` of the ChaCha8 generator keyed by
/// `seed`. Under antithetic sampling both members of a pair share the
/// stream of the even index.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn path_stream(cfg: &SimConfig, i: usize) -> (ChaCha8Rng, f64) {
    if cfg.antithetic {
        let sign = if i % 2 == 1 { -1.0 } else { 1.0 };
        (path_rng(cfg.seed, (i - i % 2) as u64), sign)
    } else {
        (path_rng(cfg.seed, i as u64), 1.0)
    }
}

fn kappa_for(policy: &Policy, p: &ModelParams) -> f64 {
    match policy {
        Policy::DoubleBarrier { .. } => p.kappa.unwrap_or(f64::NAN),
        _ => 0.0,
    }
}

fn in_pool<T: Send>(workers: usize, job: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(job());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(job))
}

pub fn simulate_paths(cfg: &SimConfig, policy: &Policy, p: &ModelParams) -> Result<SimResult> {
    cfg.validate(p)?;
    policy.validate(p)?;
    let engine = Engine::new(cfg, policy, p);
    let paths: Vec<PathOutcome> = in_pool(cfg.workers, || {
        (0..cfg.n_paths)
            .into_par_iter()
            .map(|i| {
                let (mut rng, sign) = path_stream(cfg, i);
                engine.run(&mut rng, sign, |_| {})
            })
            .collect()
    })?;
    let kappa = kappa_for(policy, p);
    let mut summary = summarize(&paths, kappa, engine.horizon)?;
    if cfg.antithetic {
        let div: Vec<f64> = paths.iter().map(|o| o.pv_dividends).collect();
        let inj: Vec<f64> = paths.iter().map(|o| o.pv_injections).collect();
        let net: Vec<f64> = paths
            .iter()
            .map(|o| o.pv_dividends - kappa * o.pv_injections)
            .collect();
        summary.pv_dividends.std_error = pair_std_error(&div);
        summary.pv_injections.std_error = pair_std_error(&inj);
        summary.net_value.std_error = pair_std_error(&net);
    }
    Ok(SimResult { paths, summary })
}

/// Replays a single path and returns every control it triggers, together
/// with its outcome.
pub fn trace_path(
    cfg: &SimConfig,
    policy: &Policy,
    p: &ModelParams,
    index: usize,
) -> Result<(PathOutcome, Vec<ControlEvent>)> {
    cfg.validate(p)?;
    policy.validate(p)?;
    let engine = Engine::new(cfg, policy, p);
    let (mut rng, sign) = path_stream(cfg, index);
    let mut events = Vec::new();
    let out = engine.run(&mut rng, sign, |e| events.push(e));
    Ok((out, events))
}

/// Two policies on common random numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedResult {
    pub a: SimResult,
    pub b: SimResult,
    /// Per-path `a - b` of discounted dividends.
    pub dividend_difference: SampleStats,
    pub net_difference: SampleStats,
    /// Per-path `a - b` of censored ruin times.
    pub ruin_time_difference: SampleStats,
}

impl PairedResult {
    /// Per-path pairs as CSV.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(
            w,
            "path_index,pv_dividends_a,ruin_time_a,censored_a,pv_dividends_b,ruin_time_b,censored_b"
        )?;
        for (i, (a, b)) in self.a.paths.iter().zip(&self.b.paths).enumerate() {
            writeln!(
                w,
                "{i},{},{},{},{},{},{}",
                sig17(a.pv_dividends),
                sig17(a.ruin_time),
                u8::from(a.censored),
                sig17(b.pv_dividends),
                sig17(b.ruin_time),
                u8::from(b.censored)
            )?;
        }
        Ok(())
    }
}

impl fmt::Display for PairedResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = &self.dividend_difference;
        writeln!(f, "paired_dividend_difference_mean={}", sig17(d.mean))?;
        writeln!(
            f,
            "paired_dividend_difference_std_error={}",
            sig17(d.std_error)
        )?;
        writeln!(
            f,
            "paired_net_difference_mean={}",
            sig17(self.net_difference.mean)
        )?;
        writeln!(
            f,
            "paired_net_difference_std_error={}",
            sig17(self.net_difference.std_error)
        )?;
        writeln!(
            f,
            "paired_ruin_time_difference_mean={}",
            sig17(self.ruin_time_difference.mean)
        )?;
        writeln!(
            f,
            "cv_pv_dividends_a={}",
            sig17(self.a.summary.pv_dividends.cv)
        )?;
        write!(
            f,
            "cv_pv_dividends_b={}",
            sig17(self.b.summary.pv_dividends.cv)
        )
    }
}

pub fn paired_compare(
    cfg: &SimConfig,
    policy_a: &Policy,
    policy_b: &Policy,
    p: &ModelParams,
) -> Result<PairedResult> {
    let a = simulate_paths(cfg, policy_a, p)?;
    let b = simulate_paths(cfg, policy_b, p)?;
    let (ka, kb) = (a.summary.kappa, b.summary.kappa);
    let diff = |f: &dyn Fn(&PathOutcome, f64) -> f64| -> Vec<f64> {
        a.paths
            .iter()
            .zip(&b.paths)
            .map(|(x, y)| f(x, ka) - f(y, kb))
            .collect()
    };
    let dividend_difference = sample_stats(&diff(&|o, _| o.pv_dividends))?;
    let net_difference = sample_stats(&diff(&|o, k| o.pv_dividends - k * o.pv_injections))?;
    let ruin_time_difference = sample_stats(&diff(&|o, _| o.ruin_time))?;
    Ok(PairedResult {
        a,
        b,
        dividend_difference,
        net_difference,
        ruin_time_difference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p1() -> ModelParams {
        ModelParams::new(0.05, 0.02, 0.3, 0.1, 0.0, 0.06, 1.0)
    }

    #[test]
    fn stats_by_hand() {
        let s = sample_stats(&[0.0, 2.0]).unwrap();
        assert_eq!((s.mean, s.variance), (1.0, 2.0));
        assert!((s.cv - 2f64.sqrt()).abs() < 1e-15);
        let c = sample_stats(&[3.5; 7]).unwrap();
        assert_eq!((c.mean, c.variance), (3.5, 0.0));
        assert!(sample_stats(&[-1.0, 1.0]).unwrap().cv.is_nan());
        assert!(matches!(sample_stats(&[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn all_censored_summary() {
        let o = PathOutcome {
            pv_dividends: 1.0,
            pv_injections: 0.0,
            ruin_time: 10.0,
            censored: true,
        };
        let s = summarize(&[o; 4], 0.0, 10.0).unwrap();
        assert_eq!(s.ruin_fraction, 0.0);
        assert_eq!(s.censored_ruin_mean, 10.0);
        assert!(matches!(summarize(&[], 0.0, 1.0), Err(Error::EmptyInput)));
    }

    #[test]
    fn golden_normals() {
        // Freezes the generator and the stream derivation.
        let mut rng = path_rng(42, 3);
        let z: Vec<f64> = (0..3).map(|_| rng.sample(StandardNormal)).collect();
        assert_eq!(
            z,
            [-0.4079227864151452, 0.19702291262938096, 0.5078505446745114]
        );
    }

    #[test]
    fn ruined_at_start() {
        let p = p1();
        let cfg = SimConfig::new(1.0, 1.0, 0.01, 5.0, 3, 1);
        let r = simulate_paths(&cfg, &Policy::UnconstrainedBarrier { beta: 2.0 }, &p).unwrap();
        for o in &r.paths {
            assert_eq!((o.pv_dividends, o.ruin_time, o.censored), (0.0, 0.0, false));
        }
    }

    #[test]
    fn lump_at_start_above_barrier() {
        let p = p1();
        let cfg = SimConfig::new(5.0, 2.0, 0.01, 0.01, 1, 1);
        let (_, events) =
            trace_path(&cfg, &Policy::UnconstrainedBarrier { beta: 2.0 }, &p, 0).unwrap();
        assert_eq!(events[0].time, 0.0);
        assert!((events[0].amount - 1.0).abs() < 1e-14);
    }

    #[test]
    fn config_errors() {
        let p = p1();
        let pol = Policy::UnconstrainedBarrier { beta: 2.0 };
        let mut cfg = SimConfig::new(2.0, 1.0, 0.01, 1.0, 10, 1);
        cfg.dt = 0.0;
        assert!(matches!(
            simulate_paths(&cfg, &pol, &p),
            Err(Error::Config(_))
        ));
        let cfg = SimConfig::new(0.5, 1.0, 0.01, 1.0, 10, 1);
        assert!(matches!(
            simulate_paths(&cfg, &pol, &p),
            Err(Error::Config(_))
        ));
        let cfg = SimConfig::new(2.0, 1.0, 0.01, 1.0, 0, 1);
        assert!(matches!(
            simulate_paths(&cfg, &pol, &p),
            Err(Error::Config(_))
        ));
        let cfg = SimConfig::new(2.0, 1.0, 0.01, 1.0, 10, 1);
        let db = Policy::DoubleBarrier {
            beta: 2.0,
            gamma: 1.0,
        };
        assert!(matches!(
            simulate_paths(&cfg, &db, &p),
            Err(Error::Config(_))
        ));
        let bad = Policy::SolvencyConstrained {
            beta: 1.1,
            alpha1: 1.2,
        };
        assert!(matches!(
            simulate_paths(&cfg, &bad, &p),
            Err(Error::Config(_))
        ));
        let bad = Policy::DoubleBarrier {
            beta: 2.0,
            gamma: 0.9,
        };
        assert!(matches!(
            simulate_paths(&cfg, &bad, &p.with_kappa(1.1)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn double_barrier_controls_stay_in_corridor() {
        let p = p1().with_kappa(1.05);
        let cfg = SimConfig::new(1.5, 1.0, 0.01, 50.0, 4, 9);
        let pol = Policy::DoubleBarrier {
            beta: 2.0,
            gamma: 1.0,
        };
        for i in 0..4 {
            let (out, events) = trace_path(&cfg, &pol, &p, i).unwrap();
            assert!(out.censored && out.pv_dividends >= 0.0 && out.pv_injections >= 0.0);
            assert!(events.iter().any(|e| e.amount < 0.0));
            for e in events {
                assert!(e.ratio_after >= 1.0 && e.ratio_after <= 2.0);
            }
        }
    }

    fn render(r: &SimResult) -> Vec<u8> {
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        buf.extend(r.summary.to_string().bytes());
        buf
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let p = p1();
        let pol = Policy::UnconstrainedBarrier { beta: 2.0 };
        let mut cfg = SimConfig::new(1.5, 1.0, 0.02, 20.0, 64, 5);
        cfg.workers = 1;
        let one = render(&simulate_paths(&cfg, &pol, &p).unwrap());
        cfg.workers = 3;
        assert_eq!(one, render(&simulate_paths(&cfg, &pol, &p).unwrap()));
    }

    #[test]
    fn antithetic_pairs_mirror_noise() {
        let p = p1();
        let mut cfg = SimConfig::new(1.5, 1.0, 0.1, 0.1, 2, 5);
        cfg.antithetic = true;
        let pol = Policy::UnconstrainedBarrier { beta: 100.0 };
        let e = Engine::new(&cfg, &pol, &p);
        let (mut r0, s0) = path_stream(&cfg, 0);
        let (mut r1, s1) = path_stream(&cfg, 1);
        assert_eq!((s0, s1), (1.0, -1.0));
        let a: f64 = r0.sample(StandardNormal);
        let b: f64 = r1.sample(StandardNormal);
        assert_eq!(a, b);
        assert!(e.steps == 1);
    }
}
