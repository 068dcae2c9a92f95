//! Numerical checks of the sufficient optimality conditions.
//!
//! A candidate value function is optimal if it is regular enough, has the
//! right slope where dividends (or injections) are paid, and is annihilated
//! or made non-positive by `A - delta`, where `A` is the generator of the
//! bivariate GBM. These checks evaluate every such condition on a funding
//! ratio grid and report the worst violation of each. By homogeneity the
//! grid fixes `x2 = 1` without loss of generality.
//!
//! The generator is applied analytically from exact partials. A
//! finite-difference evaluation on the same grid is reported alongside as
//! a consistency check of those partials.

use std::fmt;

use rayon::prelude::*;

use crate::closed_form::{constrained_barrier_beta1, optimal_barrier_beta0, ClosedFormValue};
use crate::error::{Error, Result};
use crate::injections::{optimal_barrier_beta2, DoubleBarrierValue};
use crate::params::ModelParams;
use crate::value::{Partials, ValueFunction};

pub const DEFAULT_GRID_POINTS: usize = 512;
/// Tolerance for equality conditions evaluated from exact partials.
pub const EQUALITY_TOL: f64 = 1e-8;
/// Tolerance for equality conditions evaluated by finite differences.
pub const FD_TOL: f64 = 1e-4;
/// Slack allowed on inequality conditions.
pub const INEQUALITY_SLACK: f64 = 1e-10;
/// Relative finite-difference step.
pub const DEFAULT_REL_STEP: f64 = 1e-5;
const MIN_STEP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GeneratorMode {
    /// Uses the exact partials of the value function.
    Analytic,
    /// Central differences with step `max(rel_step * x, 1e-9)` per coordinate.
    FiniteDifference { rel_step: f64 },
}

impl GeneratorMode {
    pub fn finite_difference() -> Self {
        GeneratorMode::FiniteDifference {
            rel_step: DEFAULT_REL_STEP,
        }
    }
}

fn generator_from_partials(d: &Partials, x1: f64, x2: f64, p: &ModelParams) -> f64 {
    p.mu_a * x1 * d.d1
        + p.mu_l * x2 * d.d2
        + 0.5 * p.sigma_a * p.sigma_a * x1 * x1 * d.d11
        + 0.5 * p.sigma_l * p.sigma_l * x2 * x2 * d.d22
        + p.rho * p.sigma_a * p.sigma_l * x1 * x2 * d.d12
}

/// Sum of the magnitudes of the terms of `(A - delta) V`; the natural scale
/// for relative residuals.
fn generator_scale(d: &Partials, x1: f64, x2: f64, p: &ModelParams) -> f64 {
    (p.mu_a * x1 * d.d1).abs()
        + (p.mu_l * x2 * d.d2).abs()
        + (0.5 * p.sigma_a * p.sigma_a * x1 * x1 * d.d11).abs()
        + (0.5 * p.sigma_l * p.sigma_l * x2 * x2 * d.d22).abs()
        + (p.rho * p.sigma_a * p.sigma_l * x1 * x2 * d.d12).abs()
        + (p.delta * d.value).abs()
}

fn steps(x1: f64, x2: f64, rel_step: f64) -> (f64, f64) {
    (
        (rel_step * x1.abs()).max(MIN_STEP),
        (rel_step * x2.abs()).max(MIN_STEP),
    )
}

/// Smallest and largest funding ratio touched by the stencil at `(x1, x2)`.
fn stencil_ratio_range(x1: f64, x2: f64, rel_step: f64) -> (f64, f64) {
    let (h1, h2) = steps(x1, x2, rel_step);
    ((x1 - h1) / (x2 + h2), (x1 + h1) / (x2 - h2))
}

/// `(A f)(x1, x2)`.
pub fn generator_apply<F: ValueFunction + ?Sized>(
    f: &F,
    x1: f64,
    x2: f64,
    p: &ModelParams,
    mode: GeneratorMode,
) -> Result<f64> {
    match mode {
        GeneratorMode::Analytic => Ok(generator_from_partials(&f.partials(x1, x2)?, x1, x2, p)),
        GeneratorMode::FiniteDifference { rel_step } => {
            let (lo, hi) = stencil_ratio_range(x1, x2, rel_step);
            for seam in f.seams().into_iter().chain(std::iter::once(f.floor())) {
                if lo < seam && seam < hi {
                    return Err(Error::Seam {
                        ratio: x1 / x2,
                        seam,
                    });
                }
            }
            let d = finite_difference_partials(f, x1, x2, rel_step)?;
            Ok(generator_from_partials(&d, x1, x2, p))
        }
    }
}

/// Central-difference partials.
fn finite_difference_partials<F: ValueFunction + ?Sized>(
    f: &F,
    x1: f64,
    x2: f64,
    rel_step: f64,
) -> Result<Partials> {
    let (h1, h2) = steps(x1, x2, rel_step);
    let v = |a: f64, b: f64| f.value(a, b);
    let c = v(x1, x2)?;
    let (e1, w1) = (v(x1 + h1, x2)?, v(x1 - h1, x2)?);
    let (n2, s2) = (v(x1, x2 + h2)?, v(x1, x2 - h2)?);
    let (pp, pm) = (v(x1 + h1, x2 + h2)?, v(x1 + h1, x2 - h2)?);
    let (mp, mm) = (v(x1 - h1, x2 + h2)?, v(x1 - h1, x2 - h2)?);
    Ok(Partials {
        value: c,
        d1: (e1 - w1) / (2.0 * h1),
        d2: (n2 - s2) / (2.0 * h2),
        d11: (e1 - 2.0 * c + w1) / (h1 * h1),
        d22: (n2 - 2.0 * c + s2) / (h2 * h2),
        d12: (pp - pm - mp + mm) / (4.0 * h1 * h2),
    })
}

/// `(A - delta) f` from exact partials, with its relative scale.
fn discounted_generator(d: &Partials, x1: f64, x2: f64, p: &ModelParams) -> (f64, f64) {
    let g = generator_from_partials(d, x1, x2, p) - p.delta * d.value;
    (g, generator_scale(d, x1, x2, p).max(f64::MIN_POSITIVE))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Problem {
    Solvency,
    Injection,
}

impl Problem {
    pub fn label(self) -> &'static str {
        match self {
            Problem::Solvency => "solvency",
            Problem::Injection => "injection",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionResult {
    pub id: &'static str,
    pub description: &'static str,
    /// Worst normalized violation; zero when the condition holds exactly.
    pub worst_violation: f64,
    /// Funding ratio of the worst violation.
    pub location: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl ConditionResult {
    fn new(id: &'static str, description: &'static str, worst: Worst, tolerance: f64) -> Self {
        Self {
            id,
            description,
            worst_violation: worst.value,
            location: worst.location,
            tolerance,
            passed: worst.value <= tolerance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    /// Relative finite-difference step.
    pub rel_step: f64,
}

impl GridSpec {
    /// Log-spaced ratios on `[lo, hi]`.
    pub fn ratios(&self) -> Vec<f64> {
        let n = self.points.max(2);
        let (l0, l1) = (self.lo.ln(), self.hi.ln());
        (0..n)
            .map(|i| {
                if i == 0 {
                    self.lo
                } else if i == n - 1 {
                    self.hi
                } else {
                    (l0 + (l1 - l0) * i as f64 / (n - 1) as f64).exp()
                }
            })
            .collect()
    }
}

/// Worst gap between the finite-difference and analytic generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdCrossCheck {
    pub worst_relative_gap: f64,
    pub location: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub problem: Problem,
    pub barrier: f64,
    pub conditions: Vec<ConditionResult>,
    pub grid: GridSpec,
    pub fd_cross_check: FdCrossCheck,
    pub passed: bool,
}

impl VerificationReport {
    fn assemble(
        problem: Problem,
        barrier: f64,
        conditions: Vec<ConditionResult>,
        grid: GridSpec,
        fd_cross_check: FdCrossCheck,
    ) -> Self {
        let passed = conditions.iter().all(|c| c.passed) && fd_cross_check.passed;
        Self {
            problem,
            barrier,
            conditions,
            grid,
            fd_cross_check,
            passed,
        }
    }

    /// Largest `worst_violation / tolerance` over all conditions.
    pub fn worst_tolerance_multiple(&self) -> f64 {
        self.conditions
            .iter()
            .map(|c| c.worst_violation / c.tolerance)
            .fold(0.0, f64::max)
    }
}

fn status(passed: bool) -> &'static str {
    if passed {
        "pass"
    } else {
        "FAIL"
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "# problem={} barrier={:.17e} grid=[{:.17e},{:.17e}] points={} fd_step={:e}",
            self.problem.label(),
            self.barrier,
            self.grid.lo,
            self.grid.hi,
            self.grid.points,
            self.grid.rel_step
        )?;
        for c in &self.conditions {
            writeln!(
                f,
                "condition={} worst_violation={:.6e} location={:.17e} tolerance={:e} status={}",
                c.id,
                c.worst_violation,
                c.location,
                c.tolerance,
                status(c.passed)
            )?;
        }
        writeln!(
            f,
            "# fd_cross_check worst_relative_gap={:.6e} location={:.17e} tolerance={:e} status={}",
            self.fd_cross_check.worst_relative_gap,
            self.fd_cross_check.location,
            self.fd_cross_check.tolerance,
            status(self.fd_cross_check.passed)
        )?;
        write!(f, "passed={}", self.passed)
    }
}

/// Options shared by the lemma checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckOptions {
    /// Replaces the optimal dividend barrier; used for negative controls.
    pub barrier_override: Option<f64>,
    pub points: usize,
    pub rel_step: f64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            barrier_override: None,
            points: DEFAULT_GRID_POINTS,
            rel_step: DEFAULT_REL_STEP,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Worst {
    value: f64,
    location: f64,
}

impl Worst {
    const NONE: Worst = Worst {
        value: 0.0,
        location: f64::NAN,
    };

    fn at(value: f64, location: f64) -> Self {
        Worst { value, location }
    }

    /// NaN counts as the worst possible violation.
    fn max(self, other: Worst) -> Worst {
        let other_value = if other.value.is_nan() {
            f64::INFINITY
        } else {
            other.value
        };
        if other_value > self.value || (self.location.is_nan() && other_value >= self.value) {
            Worst::at(other_value, other.location)
        } else {
            self
        }
    }
}

struct GridPoint {
    y: f64,
    d: Partials,
    gen: f64,
    scale: f64,
}

fn evaluate_grid<F: ValueFunction>(
    f: &F,
    p: &ModelParams,
    grid: &GridSpec,
) -> Result<Vec<GridPoint>> {
    grid.ratios()
        .par_iter()
        .map(|&y| {
            let d = f.partials(y, 1.0)?;
            let (gen, scale) = discounted_generator(&d, y, 1.0, p);
            Ok(GridPoint { y, d, gen, scale })
        })
        .collect()
}

/// Moves `y` off any seam (or the floor) its stencil would straddle.
fn shift_off_seams(y: f64, seams: &[f64], floor: f64, rel_step: f64) -> f64 {
    let margin = 4.0 * rel_step;
    let mut y = y;
    if y < floor * (1.0 + margin) {
        y = floor * (1.0 + margin);
    }
    for &s in seams {
        let (lo, hi) = stencil_ratio_range(y, 1.0, rel_step);
        if lo <= s && s <= hi {
            y = if y <= s {
                s * (1.0 - margin)
            } else {
                s * (1.0 + margin)
            };
        }
    }
    y
}

fn fd_cross_check<F: ValueFunction>(
    f: &F,
    p: &ModelParams,
    grid: &GridSpec,
) -> Result<FdCrossCheck> {
    let seams = f.seams();
    let mode = GeneratorMode::FiniteDifference {
        rel_step: grid.rel_step,
    };
    let gaps: Vec<Worst> = grid
        .ratios()
        .par_iter()
        .map(|&y0| {
            let y = shift_off_seams(y0, &seams, f.floor(), grid.rel_step);
            let d = f.partials(y, 1.0)?;
            let analytic = generator_from_partials(&d, y, 1.0, p);
            let fd = generator_apply(f, y, 1.0, p, mode)?;
            let scale = generator_scale(&d, y, 1.0, p).max(f64::MIN_POSITIVE);
            Ok(Worst::at((fd - analytic).abs() / scale, y))
        })
        .collect::<Result<_>>()?;
    let worst = gaps.into_iter().fold(Worst::NONE, Worst::max);
    Ok(FdCrossCheck {
        worst_relative_gap: worst.value,
        location: worst.location,
        tolerance: FD_TOL,
        passed: worst.value <= FD_TOL,
    })
}

fn fold_points(points: &[GridPoint], f: impl Fn(&GridPoint) -> Option<f64>) -> Worst {
    points
        .iter()
        .filter_map(|pt| f(pt).map(|v| Worst::at(v, pt.y)))
        .fold(Worst::NONE, Worst::max)
}

/// Second derivative in `x1` at the middle of the continuation interval,
/// the normalizer for smooth-fit residuals.
fn curvature_scale<F: ValueFunction>(f: &F, lo: f64, barrier: f64) -> Result<f64> {
    Ok(f.partials(0.5 * (lo + barrier), 1.0)?
        .d11
        .abs()
        .max(f64::MIN_POSITIVE))
}

/// Checks the six sufficient conditions for the solvency-constrained problem
/// at the barrier `max(beta0*, alpha1)`.
pub fn check_solvency_lemma(p: &ModelParams) -> Result<VerificationReport> {
    check_solvency_lemma_with(p, CheckOptions::default())
}

pub fn check_solvency_lemma_with(
    p: &ModelParams,
    opts: CheckOptions,
) -> Result<VerificationReport> {
    let alpha1 = p.alpha1.ok_or(Error::MissingParameter("alpha1"))?;
    let barrier = match opts.barrier_override {
        Some(b) => b,
        None => constrained_barrier_beta1(p)?,
    };
    let f = ClosedFormValue::new(barrier, p)?;
    let grid = GridSpec {
        lo: p.alpha0,
        hi: 3.0 * barrier,
        points: opts.points,
        rel_step: opts.rel_step,
    };
    let points = evaluate_grid(&f, p, &grid)?;

    let nonnegative = fold_points(&points, |pt| Some((-pt.d.value).max(0.0)));

    // C^1 everywhere; C^2 everywhere except on the solvency level itself.
    let at_barrier = f.partials(barrier, 1.0)?;
    let mut regularity = Worst::at((at_barrier.d1 - 1.0).abs(), barrier);
    if barrier != alpha1 {
        let curvature = curvature_scale(&f, p.alpha0, barrier)?;
        regularity = regularity.max(Worst::at(at_barrier.d11.abs() / curvature, barrier));
    }

    let bounded = fold_points(&points, |pt| {
        Some(if pt.d.d1.is_finite() && pt.d.d2.is_finite() {
            0.0
        } else {
            f64::INFINITY
        })
    });

    let slope = fold_points(&points, |pt| {
        (pt.y >= alpha1).then(|| (1.0 - pt.d.d1).max(0.0))
    });

    let continuation = fold_points(&points, |pt| {
        (pt.y > p.alpha0 && pt.y < barrier).then(|| pt.gen.abs() / pt.scale)
    });

    let intervention = fold_points(&points, |pt| {
        (pt.y > alpha1).then(|| (pt.gen / pt.scale).max(0.0))
    });

    let conditions = vec![
        ConditionResult::new(
            "nonnegative",
            "value is nonnegative",
            nonnegative,
            INEQUALITY_SLACK,
        ),
        ConditionResult::new(
            "regularity",
            "C1 across the barrier, C2 away from the solvency level",
            regularity,
            EQUALITY_TOL,
        ),
        ConditionResult::new(
            "bounded-gradient",
            "first partials finite on the compact grid",
            bounded,
            0.0,
        ),
        ConditionResult::new(
            "dividend-slope",
            "dV/dx1 >= 1 at and above the solvency level",
            slope,
            INEQUALITY_SLACK,
        ),
        ConditionResult::new(
            "continuation-generator",
            "(A - delta) V = 0 below the barrier",
            continuation,
            EQUALITY_TOL,
        ),
        ConditionResult::new(
            "intervention-generator",
            "(A - delta) V <= 0 above the solvency level",
            intervention,
            INEQUALITY_SLACK,
        ),
    ];
    let fd = fd_cross_check(&f, p, &grid)?;
    Ok(VerificationReport::assemble(
        Problem::Solvency,
        barrier,
        conditions,
        grid,
        fd,
    ))
}

/// Checks the five sufficient conditions for the injection problem at the
/// barriers `(beta2*, alpha0)`.
pub fn check_injection_lemma(p: &ModelParams) -> Result<VerificationReport> {
    check_injection_lemma_with(p, CheckOptions::default())
}

pub fn check_injection_lemma_with(
    p: &ModelParams,
    opts: CheckOptions,
) -> Result<VerificationReport> {
    let kappa = p.kappa.ok_or(Error::MissingParameter("kappa"))?;
    let barrier = match opts.barrier_override {
        Some(b) => b,
        None => optimal_barrier_beta2(p)?,
    };
    let gamma = p.alpha0;
    let f = DoubleBarrierValue::new(barrier, gamma, p)?;
    let grid = GridSpec {
        lo: p.alpha0,
        hi: 3.0 * barrier,
        points: opts.points,
        rel_step: opts.rel_step,
    };
    let points = evaluate_grid(&f, p, &grid)?;

    // Slopes pin down C^1 at both barriers; the second partials at the
    // dividend barrier must all vanish for C^2. The x2x2 and x1x2 partials
    // are tied to the x1x1 one by homogeneity.
    let curvature = curvature_scale(&f, gamma, barrier)?;
    let top = f.partials(barrier, 1.0)?;
    let bottom = f.partials(gamma, 1.0)?;
    let regularity = [
        Worst::at((top.d1 - 1.0).abs(), barrier),
        Worst::at((bottom.d1 - kappa).abs() / kappa, gamma),
        Worst::at(top.d11.abs() / curvature, barrier),
        Worst::at(top.d22.abs() / (barrier * barrier * curvature), barrier),
        Worst::at(top.d12.abs() / (barrier * curvature), barrier),
    ]
    .into_iter()
    .fold(Worst::NONE, Worst::max);

    let nonnegative = fold_points(&points, |pt| Some((-pt.d.value).max(0.0)));

    let generator = fold_points(&points, |pt| {
        Some(if pt.y < barrier {
            pt.gen.abs() / pt.scale
        } else {
            (pt.gen / pt.scale).max(0.0)
        })
    });

    let corridor = fold_points(&points, |pt| {
        Some((1.0 - pt.d.d1).max(pt.d.d1 - kappa).max(0.0) / kappa)
    });

    let bounded = fold_points(&points, |pt| {
        Some(if pt.d.d2.is_finite() {
            0.0
        } else {
            f64::INFINITY
        })
    });

    let conditions = vec![
        ConditionResult::new(
            "regularity",
            "C2 across the dividend barrier, slopes 1 and kappa at the barriers",
            regularity,
            EQUALITY_TOL,
        ),
        ConditionResult::new(
            "nonnegative",
            "value is nonnegative",
            nonnegative,
            INEQUALITY_SLACK,
        ),
        ConditionResult::new(
            "generator-sign",
            "(A - delta) V = 0 below the barrier and <= 0 above",
            generator,
            EQUALITY_TOL,
        ),
        ConditionResult::new(
            "slope-corridor",
            "1 <= dV/dx1 <= kappa",
            corridor,
            INEQUALITY_SLACK,
        ),
        ConditionResult::new(
            "bounded-liability-gradient",
            "dV/dx2 finite on the compact grid",
            bounded,
            0.0,
        ),
    ];
    let fd = fd_cross_check(&f, p, &grid)?;
    Ok(VerificationReport::assemble(
        Problem::Injection,
        barrier,
        conditions,
        grid,
        fd,
    ))
}

/// One-sided `d2V/dx1^2` at the optimal barrier, normalized by its value at
/// the middle of the continuation interval. `None` when the barrier is set
/// by the solvency level rather than by smooth fit.
pub fn check_smooth_fit(p: &ModelParams, problem: Problem) -> Result<Option<f64>> {
    match problem {
        Problem::Solvency => {
            let b0 = optimal_barrier_beta0(p);
            if let Some(alpha1) = p.alpha1 {
                if alpha1 > b0 {
                    return Ok(None);
                }
            }
            let f = ClosedFormValue::new(b0, p)?;
            let curvature = curvature_scale(&f, p.alpha0, b0)?;
            Ok(Some(f.partials(b0, 1.0)?.d11 / curvature))
        }
        Problem::Injection => {
            let b2 = optimal_barrier_beta2(p)?;
            let f = DoubleBarrierValue::new(b2, p.alpha0, p)?;
            let curvature = curvature_scale(&f, p.alpha0, b2)?;
            Ok(Some(f.partials(b2, 1.0)?.d11 / curvature))
        }
    }
}
