//! Independent oracles for cross-checking `alm_dividends`.
//!
//! Nothing here calls the closed forms it is meant to check: exponents come
//! from the textbook quadratic formula and barriers from direct numerical
//! maximization.

use alm_dividends::ModelParams;
use rand::Rng;

/// Roots of `s2/2 z^2 + (mu_A - mu_L - s2/2) z + (mu_L - delta) = 0` by the
/// plain quadratic formula, smaller root first.
pub fn textbook_roots(p: &ModelParams) -> (f64, f64) {
    let s2 = (p.sigma_a - p.sigma_l).powi(2) + 2.0 * (1.0 - p.rho) * p.sigma_a * p.sigma_l;
    let a = 0.5 * s2;
    let b = p.mu_a - p.mu_l - 0.5 * s2;
    let c = p.mu_l - p.delta;
    let disc = (b * b - 4.0 * a * c).sqrt();
    ((-b - disc) / (2.0 * a), (-b + disc) / (2.0 * a))
}

/// Maximizes a unimodal `f` on `[lo, hi]` by golden-section search. The
/// function is accessed only through `gap(a, b) = f(a) - f(b)`, so callers
/// can evaluate differences without cancellation.
pub fn golden_section_max(gap: impl Fn(f64, f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..1000 {
        if hi - lo <= tol {
            break;
        }
        let c = hi - inv_phi * (hi - lo);
        let d = lo + inv_phi * (hi - lo);
        if gap(c, d) > 0.0 {
            hi = d;
        } else {
            lo = c;
        }
    }
    0.5 * (lo + hi)
}

/// `D(s) = z1 e^{(z1-1)s} - z2 e^{(z2-1)s}`, the denominator of the barrier
/// value as a function of `s = ln(beta / alpha0)`, differenced as
/// `D(sa) - D(sb)` through `expm1` so nearly equal points stay resolvable.
pub fn denominator_gap(z1: f64, z2: f64, sa: f64, sb: f64) -> f64 {
    let d = sa - sb;
    z1 * ((z1 - 1.0) * sb).exp() * ((z1 - 1.0) * d).exp_m1()
        - z2 * ((z2 - 1.0) * sb).exp() * ((z2 - 1.0) * d).exp_m1()
}

/// Optimal unconstrained barrier found by maximizing the barrier-value
/// denominator numerically.
pub fn beta0_by_golden_section(p: &ModelParams) -> f64 {
    let (z1, z2) = textbook_roots(p);
    let gap = |a: f64, b: f64| denominator_gap(z1, z2, a, b);
    // Bracket the maximum: grow the upper end until the function decreases.
    let mut hi = 1e-3;
    while gap(hi, 0.5 * hi) > 0.0 && hi < 1e3 {
        hi *= 2.0;
    }
    let s = golden_section_max(gap, 0.0, hi, 1e-14 * hi.max(1.0));
    p.alpha0 * s.exp()
}

/// A random parameter set satisfying every model invariant, over ranges
/// wide enough to include strongly correlated and low-volatility cases.
pub fn random_params<R: Rng>(rng: &mut R) -> ModelParams {
    let mu_l = rng.random_range(-0.02..0.05);
    let mu_a = mu_l + rng.random_range(0.002..0.08);
    let delta = mu_a + rng.random_range(0.002..0.1);
    ModelParams::new(
        mu_a,
        mu_l,
        rng.random_range(0.05..0.6),
        rng.random_range(0.05..0.6),
        rng.random_range(-0.95..0.95),
        delta,
        rng.random_range(0.3..3.0),
    )
}
