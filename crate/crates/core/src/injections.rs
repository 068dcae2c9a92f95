//! Doubly-reflected strategy: dividends above `beta`, forced capital
//! injections below `gamma` at cost `kappa` per unit.
//!
//! The optimal injection level is always the ruin level, so the optimizers
//! here fix `gamma = alpha0` and solve only for the dividend barrier. General
//! `gamma` is still accepted for value surfaces.

use crate::closed_form::{exponents, Exponents};
use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::roots::{bisect, expand_upper};
use crate::value::{check_point, pow_ratio, Branch, Partials, PowerSolution, ValueFunction};

/// Relative offset of the lower end of the barrier bracket above `gamma`.
const BRACKET_OFFSET: f64 = 1e-12;
/// Bracket expansion gives up past `2^60 * gamma`.
const BRACKET_CAP_LOG2: i32 = 60;
/// Bisection tolerance on `beta`, relative to `gamma`.
const BARRIER_TOL: f64 = 1e-12;
/// Smallest injection cost tried by [`breakeven_kappa`].
const KAPPA_FLOOR: f64 = 1.0 + 1e-8;
pub const DEFAULT_KAPPA_CAP: f64 = 1e3;
/// Number of sample points in the break-even monotonicity check.
const MONOTONICITY_SAMPLES: usize = 8;

/// Value of the doubly-reflected strategy with barriers `gamma < beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleBarrierValue {
    pub beta: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub alpha0: f64,
    pub exponents: Exponents,
    solution: PowerSolution,
}

impl DoubleBarrierValue {
    pub fn new(beta: f64, gamma: f64, p: &ModelParams) -> Result<Self> {
        let kappa = p.kappa.ok_or(Error::MissingParameter("kappa"))?;
        check_barriers(beta, gamma, p)?;
        let exponents = exponents(p);
        let Exponents { zeta1, zeta2, .. } = exponents;
        // Slope conditions h'(gamma) = kappa and h'(beta) = 1, solved for
        // P = k1 zeta1 and Q = k2 zeta2 with the anchor at gamma.
        let b = beta / gamma;
        let p_coef = gamma * (1.0 - kappa * pow_ratio(b, zeta2 - 1.0))
            / (pow_ratio(b, zeta1 - 1.0) - pow_ratio(b, zeta2 - 1.0));
        let q_coef = kappa * gamma - p_coef;
        Ok(Self {
            beta,
            gamma,
            kappa,
            alpha0: p.alpha0,
            exponents,
            solution: PowerSolution::new(&exponents, gamma, p_coef / zeta1, q_coef / zeta2),
        })
    }

    /// `(C1, C2)`: coefficients of `x1^zeta1 x2^(1-zeta1)` and
    /// `x1^zeta2 x2^(1-zeta2)` on `[gamma, beta]`.
    pub fn coefficients(&self) -> (f64, f64) {
        self.solution.raw_coefficients()
    }

    /// Value per unit of liabilities at the injection barrier.
    pub fn value_at_injection_barrier(&self) -> f64 {
        self.solution.h(self.gamma)
    }

    /// Value per unit of liabilities at the dividend barrier.
    pub fn value_at_dividend_barrier(&self) -> f64 {
        self.solution.h(self.beta)
    }
}

impl ValueFunction for DoubleBarrierValue {
    fn partials(&self, x1: f64, x2: f64) -> Result<Partials> {
        let y = check_point(x1, x2, self.alpha0)?;
        if y < self.gamma {
            let at_gamma = self.solution.h(self.gamma);
            return Ok(Partials {
                value: self.kappa * (x1 - self.gamma * x2) + x2 * at_gamma,
                d1: self.kappa,
                d2: at_gamma - self.kappa * self.gamma,
                d11: 0.0,
                d22: 0.0,
                d12: 0.0,
            });
        }
        if y <= self.beta {
            return Ok(self.solution.partials(x1, x2));
        }
        let at_beta = self.solution.h(self.beta);
        Ok(Partials {
            value: x1 - self.beta * x2 + x2 * at_beta,
            d1: 1.0,
            d2: at_beta - self.beta,
            d11: 0.0,
            d22: 0.0,
            d12: 0.0,
        })
    }

    fn branch(&self, x1: f64, x2: f64) -> Result<Branch> {
        let y = check_point(x1, x2, self.alpha0)?;
        Ok(if y < self.gamma {
            Branch::Injection
        } else if y <= self.beta {
            Branch::Continuation
        } else {
            Branch::AboveBarrier
        })
    }

    fn seams(&self) -> Vec<f64> {
        if self.gamma > self.alpha0 {
            vec![self.gamma, self.beta]
        } else {
            vec![self.beta]
        }
    }

    fn floor(&self) -> f64 {
        self.alpha0
    }
}

fn check_barriers(beta: f64, gamma: f64, p: &ModelParams) -> Result<()> {
    if !(gamma >= p.alpha0) || !(gamma < beta) || !beta.is_finite() {
        return Err(Error::domain(format!(
            "need alpha0 <= gamma < beta (alpha0 = {}, gamma = {gamma}, beta = {beta})",
            p.alpha0
        )));
    }
    Ok(())
}

/// Raw `(C1, C2)` for barriers `(beta, gamma)`.
pub fn coefficients(beta: f64, gamma: f64, p: &ModelParams) -> Result<(f64, f64)> {
    Ok(DoubleBarrierValue::new(beta, gamma, p)?.coefficients())
}

pub fn value_injections(x1: f64, x2: f64, beta: f64, gamma: f64, p: &ModelParams) -> Result<f64> {
    DoubleBarrierValue::new(beta, gamma, p)?.value(x1, x2)
}

/// `psi(b) / (zeta1 gamma^(1+zeta1-zeta2))` with `b = beta / gamma`. Same
/// roots as the barrier equation, opposite sign.
fn psi_scaled(b: f64, z: &Exponents, kappa: f64) -> f64 {
    let Exponents { zeta1, zeta2, .. } = *z;
    kappa * (zeta1 - zeta2) * pow_ratio(b, zeta1)
        + (zeta2 - 1.0) * b
        + (1.0 - zeta1) * pow_ratio(b, 1.0 + zeta1 - zeta2)
}

/// The barrier equation: its unique root in `beta` above `gamma` is the
/// optimal dividend barrier for injection level `gamma`. Positive at
/// `beta = gamma` when `kappa > 1`, strictly decreasing, unbounded below.
pub fn psi(beta: f64, gamma: f64, p: &ModelParams) -> Result<f64> {
    let kappa = p.kappa.ok_or(Error::MissingParameter("kappa"))?;
    if !(gamma >= p.alpha0) || !(beta >= gamma) {
        return Err(Error::domain(format!(
            "need beta >= gamma >= alpha0 (beta = {beta}, gamma = {gamma})"
        )));
    }
    let z = exponents(p);
    let scale = z.zeta1 * pow_ratio(gamma, 1.0 + z.zeta1 - z.zeta2);
    Ok(scale * psi_scaled(beta / gamma, &z, kappa))
}

/// Optimal dividend barrier when injections happen at `gamma`.
pub fn optimal_barrier_for_gamma(gamma: f64, p: &ModelParams) -> Result<f64> {
    let kappa = p.kappa.ok_or(Error::MissingParameter("kappa"))?;
    if !(gamma >= p.alpha0) || !gamma.is_finite() {
        return Err(Error::domain(format!(
            "injection barrier {gamma} below alpha0 = {}",
            p.alpha0
        )));
    }
    let z = exponents(p);
    let f = |b: f64| psi_scaled(b, &z, kappa);
    let lo = 1.0 + BRACKET_OFFSET;
    let cap = 2f64.powi(BRACKET_CAP_LOG2);
    // psi_scaled is negative where psi is positive
    if f(lo) >= 0.0 {
        return Err(Error::BracketFailure { cap: cap * gamma });
    }
    let hi = expand_upper(f, false, 2.0, cap).ok_or(Error::BracketFailure { cap: cap * gamma })?;
    Ok(gamma * bisect(f, lo, hi, BARRIER_TOL))
}

/// Optimal dividend barrier with injections at the ruin level.
pub fn optimal_barrier_beta2(p: &ModelParams) -> Result<f64> {
    optimal_barrier_for_gamma(p.alpha0, p)
}

/// The optimal doubly-reflected value function, barriers `(beta2*, alpha0)`.
pub fn optimal_injection_value(p: &ModelParams) -> Result<DoubleBarrierValue> {
    DoubleBarrierValue::new(optimal_barrier_beta2(p)?, p.alpha0, p)
}

/// Injection cost for which `beta` is the optimal dividend barrier at
/// injection level `gamma`.
pub fn kappa_from_barrier(beta: f64, gamma: f64, p: &ModelParams) -> Result<f64> {
    if !(gamma >= p.alpha0) || !(beta > gamma) {
        return Err(Error::domain(format!(
            "need beta > gamma >= alpha0 (beta = {beta}, gamma = {gamma})"
        )));
    }
    let Exponents { zeta1, zeta2, .. } = exponents(p);
    let b = beta / gamma;
    Ok(
        ((zeta1 - 1.0) - (zeta2 - 1.0) * pow_ratio(b, zeta2 - zeta1))
            / ((zeta1 - zeta2) * pow_ratio(b, zeta2 - 1.0)),
    )
}

/// Injection cost at which the optimally controlled value at the ruin level
/// is exactly zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Breakeven {
    pub kappa: f64,
    pub beta2: f64,
}

/// Value per unit of liabilities at the injection barrier `alpha0` under the
/// optimal barrier for cost `kappa`.
pub fn value_at_ruin_level(kappa: f64, p: &ModelParams) -> Result<f64> {
    let q = p.with_kappa(kappa);
    Ok(optimal_injection_value(&q)?.value_at_injection_barrier())
}

pub fn breakeven_kappa(p: &ModelParams) -> Result<Breakeven> {
    breakeven_kappa_with_cap(p, DEFAULT_KAPPA_CAP)
}

/// Searches `kappa` in `[1 + 1e-8, cap]`. The value at the ruin level must
/// be positive at the lower end, negative at the cap, and decreasing on an
/// eight-point log-spaced sample in between.
pub fn breakeven_kappa_with_cap(p: &ModelParams, cap: f64) -> Result<Breakeven> {
    if !(cap > KAPPA_FLOOR) {
        return Err(Error::domain(format!("kappa cap {cap} must exceed 1")));
    }
    let f = |kappa: f64| value_at_ruin_level(kappa, p);
    let at_floor = f(KAPPA_FLOOR)?;
    if !(at_floor > 0.0) {
        return Err(Error::NoBreakeven(format!(
            "value at the ruin level is {at_floor} <= 0 already at kappa = {KAPPA_FLOOR}"
        )));
    }
    let at_cap = f(cap)?;
    if !(at_cap < 0.0) {
        return Err(Error::NoBreakeven(format!(
            "value at the ruin level is still {at_cap} >= 0 at kappa = {cap}"
        )));
    }

    let (l0, l1) = ((KAPPA_FLOOR - 1.0).ln(), (cap - 1.0).ln());
    let mut prev = f64::INFINITY;
    for i in 0..MONOTONICITY_SAMPLES {
        let t = i as f64 / (MONOTONICITY_SAMPLES - 1) as f64;
        let kappa = 1.0 + (l0 + t * (l1 - l0)).exp();
        let v = f(kappa)?;
        if !(v < prev) {
            return Err(Error::MonotonicityViolated(format!(
                "value at the ruin level does not decrease in kappa near {kappa} ({v} after {prev})"
            )));
        }
        prev = v;
    }

    // Propagate inner failures out of the closure through a side slot.
    let mut failure = None;
    let kappa = bisect(
        |k| match f(k) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        KAPPA_FLOOR,
        cap,
        1e-13,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let beta2 = optimal_barrier_beta2(&p.with_kappa(kappa))?;
    Ok(Breakeven { kappa, beta2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::optimal_barrier_beta0;
    use approx::assert_relative_eq;

    fn p1() -> ModelParams {
        ModelParams::new(0.05, 0.02, 0.3, 0.1, 0.0, 0.06, 1.0).with_kappa(1.05)
    }

    /// Solves the two slope conditions for (C1, C2) directly with Cramer's
    /// rule on raw powers.
    fn linear_solve(beta: f64, gamma: f64, p: &ModelParams) -> (f64, f64) {
        let e = exponents(p);
        let k = p.kappa.unwrap();
        // row: C1 z1 y^(z1-1) + C2 z2 y^(z2-1) = slope
        let (a11, a12, r1) = (
            e.zeta1 * gamma.powf(e.zeta1 - 1.0),
            e.zeta2 * gamma.powf(e.zeta2 - 1.0),
            k,
        );
        let (a21, a22, r2) = (
            e.zeta1 * beta.powf(e.zeta1 - 1.0),
            e.zeta2 * beta.powf(e.zeta2 - 1.0),
            1.0,
        );
        let det = a11 * a22 - a12 * a21;
        ((r1 * a22 - a12 * r2) / det, (a11 * r2 - r1 * a21) / det)
    }

    #[test]
    fn coefficients_match_linear_solve() {
        let p = p1();
        let (c1, c2) = coefficients(2.0, 1.0, &p).unwrap();
        let (o1, o2) = linear_solve(2.0, 1.0, &p);
        assert!(c1.is_finite() && c2.is_finite());
        assert_relative_eq!(c1, o1, max_relative = 1e-12);
        assert_relative_eq!(c2, o2, max_relative = 1e-12);

        let (c1, c2) = coefficients(3.7, 1.4, &p).unwrap();
        let (o1, o2) = linear_solve(3.7, 1.4, &p);
        assert_relative_eq!(c1, o1, max_relative = 1e-12);
        assert_relative_eq!(c2, o2, max_relative = 1e-12);
    }

    #[test]
    fn coefficients_match_closed_form_expression() {
        let p = p1();
        let e = exponents(&p);
        let (z1, z2, k) = (e.zeta1, e.zeta2, 1.05f64);
        let (beta, gamma) = (2.5f64, 1.2f64);
        let c1 = (gamma.powf(z2 - 1.0) - k * beta.powf(z2 - 1.0))
            / (z1
                * (beta.powf(z1 - 1.0) * gamma.powf(z2 - 1.0)
                    - gamma.powf(z1 - 1.0) * beta.powf(z2 - 1.0)));
        let c2 = (k * gamma.powf(1.0 - z2) - c1 * z1 * gamma.powf(z1 - z2)) / z2;
        let (g1, g2) = coefficients(beta, gamma, &p).unwrap();
        assert_relative_eq!(g1, c1, max_relative = 1e-12);
        assert_relative_eq!(g2, c2, max_relative = 1e-12);
    }

    #[test]
    fn boundary_slopes() {
        let p = p1();
        for (beta, gamma) in [(2.0, 1.0), (3.0, 1.5), (1.01, 1.0)] {
            let v = DoubleBarrierValue::new(beta, gamma, &p).unwrap();
            assert_relative_eq!(
                v.partials(gamma, 1.0).unwrap().d1,
                1.05,
                max_relative = 1e-10
            );
            assert_relative_eq!(v.partials(beta, 1.0).unwrap().d1, 1.0, max_relative = 1e-10);
        }
    }

    #[test]
    fn branches_are_continuous() {
        let p = p1();
        let v = DoubleBarrierValue::new(3.0, 1.5, &p).unwrap();
        let eps = 1e-9;
        for seam in [1.5, 3.0] {
            let lo = v.value(seam - eps, 1.0).unwrap();
            let hi = v.value(seam + eps, 1.0).unwrap();
            assert!((lo - hi).abs() < 1e-8);
        }
        assert_eq!(v.branch(1.2, 1.0).unwrap(), Branch::Injection);
        assert_eq!(v.branch(1.5, 1.0).unwrap(), Branch::Continuation);
        assert_eq!(v.branch(3.0, 1.0).unwrap(), Branch::Continuation);
        assert_eq!(v.branch(3.5, 1.0).unwrap(), Branch::AboveBarrier);
        // both formulas at gamma
        let inj = v.kappa * 0.0 + v.value_at_injection_barrier();
        assert_eq!(v.value(1.5, 1.0).unwrap(), inj);
        assert_relative_eq!(
            v.value(2.4, 2.0).unwrap(),
            2.0 * v.value(1.2, 1.0).unwrap(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn barrier_domain_errors() {
        let p = p1();
        assert!(matches!(
            DoubleBarrierValue::new(1.0, 1.0, &p),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            DoubleBarrierValue::new(2.0, 0.5, &p),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            kappa_from_barrier(1.0, 1.0, &p),
            Err(Error::Domain(_))
        ));
        let mut no_kappa = p;
        no_kappa.kappa = None;
        assert!(matches!(
            DoubleBarrierValue::new(2.0, 1.0, &no_kappa),
            Err(Error::MissingParameter("kappa"))
        ));
        let v = DoubleBarrierValue::new(2.0, 1.0, &p).unwrap();
        assert!(matches!(v.value(0.99, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn psi_structure() {
        let p = p1();
        let e = exponents(&p);
        let gamma = 1.0;
        let at_gamma = psi(gamma, gamma, &p).unwrap();
        let expected = e.zeta1 * (1.05 * e.zeta1 - 1.05 * e.zeta2 - e.zeta1 + e.zeta2);
        assert_relative_eq!(at_gamma, expected, max_relative = 1e-12);
        assert!(at_gamma > 0.0);
        assert!(psi(1e3, gamma, &p).unwrap() < 0.0);

        let near_one = p.with_kappa(1.0 + 1e-9);
        assert!(psi(gamma, gamma, &near_one).unwrap().abs() < 1e-8);
    }

    #[test]
    fn psi_matches_expanded_form() {
        let p = p1();
        let e = exponents(&p);
        let (z1, z2, k) = (e.zeta1, e.zeta2, 1.05f64);
        for (beta, gamma) in [(1.5f64, 1.0f64), (4.0, 1.3), (12.0, 2.0)] {
            let expanded = z1
                * (beta.powf(z1) * gamma.powf(1.0 - z2) * k * z1
                    - beta.powf(z1) * gamma.powf(1.0 - z2) * k * z2
                    + gamma.powf(z1 - z2) * beta * z2
                    - beta.powf(1.0 - z2 + z1) * z1
                    - gamma.powf(z1 - z2) * beta
                    + beta.powf(1.0 - z2 + z1));
            assert_relative_eq!(
                psi(beta, gamma, &p).unwrap(),
                expanded,
                max_relative = 1e-11
            );
        }
    }

    #[test]
    fn beta2_round_trips_through_kappa() {
        let p = p1();
        let b2 = optimal_barrier_beta2(&p).unwrap();
        assert!(b2 > 1.0 && b2 < optimal_barrier_beta0(&p));
        assert!(psi(b2, 1.0, &p).unwrap().abs() < 1e-11);
        assert_relative_eq!(
            kappa_from_barrier(b2, 1.0, &p).unwrap(),
            1.05,
            max_relative = 1e-9
        );
    }

    #[test]
    fn beta2_maximizes_c1() {
        let p = p1();
        let b2 = optimal_barrier_beta2(&p).unwrap();
        // grid maximization of C1 over beta
        let mut best = (f64::NEG_INFINITY, 0.0);
        for i in 1..=40_000 {
            let beta = 1.0 + 4.0 * i as f64 / 40_000.0;
            let c1 = coefficients(beta, 1.0, &p).unwrap().0;
            if c1 > best.0 {
                best = (c1, beta);
            }
        }
        assert!(
            (best.1 - b2).abs() <= 2e-4,
            "grid argmax {} vs {b2}",
            best.1
        );
    }

    #[test]
    fn beta2_increases_with_kappa() {
        let mut last = 1.0;
        for k in [1.01, 1.05, 1.1, 1.2, 1.5] {
            let b = optimal_barrier_beta2(&p1().with_kappa(k)).unwrap();
            assert!(b >= last);
            last = b;
        }
    }

    #[test]
    fn kappa_from_barrier_limits_and_monotonicity() {
        let p = p1();
        assert_relative_eq!(
            kappa_from_barrier(1.0 + 1e-7, 1.0, &p).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        let mut last = 1.0;
        for i in 1..200 {
            let beta = 1.0 + 0.05 * i as f64;
            let k = kappa_from_barrier(beta, 1.0, &p).unwrap();
            assert!(k > last);
            last = k;
        }
    }

    #[test]
    fn concavity_at_optimal_pair() {
        let p = p1();
        let v = optimal_injection_value(&p).unwrap();
        let e = v.exponents;
        let b = v.beta / v.gamma;
        // closing AM-GM step
        assert!(1.0 <= 0.5 * (pow_ratio(b, e.zeta2 - e.zeta1) + pow_ratio(b, e.zeta1 - e.zeta2)));
        for i in 0..=100 {
            let y = 1.0 + (v.beta - 1.0) * i as f64 / 100.0;
            assert!(v.partials(y, 1.0).unwrap().d11 <= 1e-12);
            // reduced form of the concavity condition
            let u = y / v.gamma;
            let reduced = (1.0 - pow_ratio(b, e.zeta2 - e.zeta1))
                - (pow_ratio(b, e.zeta1 - e.zeta2) - 1.0) * pow_ratio(u, e.zeta2 - e.zeta1);
            assert!(reduced <= 1e-12);
        }
        let mid = v.partials(0.5 * (1.0 + v.beta), 1.0).unwrap().d11;
        assert!(v.partials(v.beta, 1.0).unwrap().d11.abs() <= 1e-9 * mid.abs());
    }

    #[test]
    fn breakeven_for_reference_set() {
        let p = p1();
        let be = breakeven_kappa(&p).unwrap();
        assert!(be.kappa > 1.0);
        let v = DoubleBarrierValue::new(be.beta2, 1.0, &p.with_kappa(be.kappa)).unwrap();
        assert!(v.value(1.0, 1.0).unwrap().abs() < 1e-10);
        assert!(value_at_ruin_level(be.kappa * 0.99, &p).unwrap() > 0.0);
        assert!(value_at_ruin_level(be.kappa * 1.01, &p).unwrap() < 0.0);

        let mut calm = p;
        calm.sigma_a = 0.1;
        assert!(breakeven_kappa(&calm).unwrap().kappa > be.kappa);
    }

    #[test]
    fn breakeven_errors() {
        let p = p1();
        assert!(matches!(
            breakeven_kappa_with_cap(&p, 1.1),
            Err(Error::NoBreakeven(_))
        ));
        assert!(matches!(
            breakeven_kappa_with_cap(&p, 0.5),
            Err(Error::Domain(_))
        ));
    }
}
