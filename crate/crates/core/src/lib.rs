//! Optimal dividend barriers for a fund whose assets and liabilities follow
//! a correlated bivariate geometric Brownian motion.
//!
//! Two problems are covered: dividends under a solvency constraint on the
//! funding ratio, and dividends with forced capital injections at a
//! proportional cost. Both have barrier-type optimal strategies with closed
//! form value functions. [`verify`] checks the sufficient optimality
//! conditions numerically and [`simulate`] provides a seedable Monte Carlo
//! engine that serves as an independent oracle.

pub mod closed_form;
pub mod error;
pub mod injections;
pub mod output;
pub mod params;
mod roots;
pub mod simulate;
pub mod sweep;
pub mod value;
pub mod verify;

pub use closed_form::{
    constrained_barrier_beta1, exponents, optimal_barrier_beta0, partials_unconstrained,
    value_constrained, value_unconstrained, ClosedFormValue, Exponents,
};
pub use error::{Error, ParamError, Result};
pub use injections::{
    breakeven_kappa, kappa_from_barrier, optimal_barrier_beta2, psi, value_injections, Breakeven,
    DoubleBarrierValue,
};
pub use params::ModelParams;
pub use simulate::{
    paired_compare, sample_stats, simulate_paths, summarize, PairedResult, PathOutcome, Policy,
    SampleStats, SimConfig, SimResult, Summary,
};
pub use value::{Branch, Partials, ValueFunction};
pub use verify::{
    check_injection_lemma, check_smooth_fit, check_solvency_lemma, generator_apply, GeneratorMode,
    Problem, VerificationReport,
};
