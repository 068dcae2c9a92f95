//! Closed forms for the barrier strategy without capital injections: the
//! characteristic exponents, the value of an arbitrary barrier, the optimal
//! barrier and its solvency-constrained counterpart.

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::value::{check_point, pow_ratio, Branch, Partials, PowerSolution, ValueFunction};

/// Roots of `0.5 s z^2 + (mu_A - mu_L - 0.5 s) z + mu_L - delta = 0`
/// with `s` the log-ratio variance rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exponents {
    pub sigma_tilde_sq: f64,
    /// Negative root.
    pub zeta1: f64,
    /// Root above one.
    pub zeta2: f64,
}

impl Exponents {
    /// Residual of the characteristic quadratic at `z`.
    pub fn characteristic(&self, p: &ModelParams, z: f64) -> f64 {
        0.5 * self.sigma_tilde_sq * z * z
            + (p.mu_a - p.mu_l - 0.5 * self.sigma_tilde_sq) * z
            + p.mu_l
            - p.delta
    }
}

/// Computes the exponents. `p` must be validated, which makes the
/// discriminant strictly positive.
pub fn exponents(p: &ModelParams) -> Exponents {
    let s = p.sigma_tilde_sq();
    let a = 0.5 * s;
    let b = p.mu_a - p.mu_l - 0.5 * s;
    let c = p.mu_l - p.delta;
    // b^2 - 4ac with c < 0; written as a sum of positives.
    let disc = b * b + 2.0 * s * (p.delta - p.mu_l);
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let (r1, r2) = (q / a, c / q);
    let (zeta1, zeta2) = if r1 < r2 { (r1, r2) } else { (r2, r1) };
    Exponents {
        sigma_tilde_sq: s,
        zeta1,
        zeta2,
    }
}

/// Value of the barrier strategy at level `beta`, ruin at `alpha0`.
///
/// On the continuation interval `[alpha0, beta]`
///
/// ```text
/// G = alpha0 x2 (u^z1 - u^z2) / (z1 (beta/alpha0)^(z1-1) - z2 (beta/alpha0)^(z2-1)),  u = x1 / (alpha0 x2)
/// ```
///
/// and above it `x1 - beta x2 + G(beta x2, x2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormValue {
    pub beta: f64,
    pub alpha0: f64,
    pub exponents: Exponents,
    solution: PowerSolution,
}

impl ClosedFormValue {
    pub fn new(beta: f64, p: &ModelParams) -> Result<Self> {
        if !(beta >= p.alpha0) || !beta.is_finite() {
            return Err(Error::domain(format!(
                "barrier {beta} must be finite and at least alpha0 = {}",
                p.alpha0
            )));
        }
        let exponents = exponents(p);
        let Exponents { zeta1, zeta2, .. } = exponents;
        let b = beta / p.alpha0;
        let denom = zeta1 * pow_ratio(b, zeta1 - 1.0) - zeta2 * pow_ratio(b, zeta2 - 1.0);
        let k = p.alpha0 / denom;
        Ok(Self {
            beta,
            alpha0: p.alpha0,
            exponents,
            solution: PowerSolution::new(&exponents, p.alpha0, k, -k),
        })
    }

    /// Coefficient of `x1^zeta1 x2^(1-zeta1)` on the continuation interval.
    pub fn coeff1(&self) -> f64 {
        self.solution.raw_coefficients().0
    }

    /// Coefficient of `x1^zeta2 x2^(1-zeta2)` on the continuation interval.
    pub fn coeff2(&self) -> f64 {
        self.solution.raw_coefficients().1
    }

    /// Value per unit of liabilities at the barrier.
    pub fn value_at_barrier(&self) -> f64 {
        self.solution.h(self.beta)
    }
}

impl ValueFunction for ClosedFormValue {
    fn partials(&self, x1: f64, x2: f64) -> Result<Partials> {
        let y = check_point(x1, x2, self.alpha0)?;
        if y <= self.beta {
            return Ok(self.solution.partials(x1, x2));
        }
        let at_barrier = self.solution.h(self.beta);
        Ok(Partials {
            value: x1 - self.beta * x2 + x2 * at_barrier,
            d1: 1.0,
            d2: at_barrier - self.beta,
            d11: 0.0,
            d22: 0.0,
            d12: 0.0,
        })
    }

    fn branch(&self, x1: f64, x2: f64) -> Result<Branch> {
        let y = check_point(x1, x2, self.alpha0)?;
        Ok(if y <= self.beta {
            Branch::Continuation
        } else {
            Branch::AboveBarrier
        })
    }

    fn seams(&self) -> Vec<f64> {
        vec![self.beta]
    }

    fn floor(&self) -> f64 {
        self.alpha0
    }
}

pub fn value_unconstrained(x1: f64, x2: f64, beta: f64, p: &ModelParams) -> Result<f64> {
    ClosedFormValue::new(beta, p)?.value(x1, x2)
}

/// `(dV/dx1, dV/dx2, d2V/dx1^2, d2V/dx2^2, d2V/dx1dx2)` of the active branch,
/// bundled with the value.
pub fn partials_unconstrained(x1: f64, x2: f64, beta: f64, p: &ModelParams) -> Result<Partials> {
    ClosedFormValue::new(beta, p)?.partials(x1, x2)
}

/// Barrier maximizing the value of every starting point.
pub fn optimal_barrier_beta0(p: &ModelParams) -> f64 {
    let Exponents { zeta1, zeta2, .. } = exponents(p);
    let ratio = (zeta1 * (zeta1 - 1.0)) / (zeta2 * (zeta2 - 1.0));
    p.alpha0 * (ratio.ln() / (zeta2 - zeta1)).exp()
}

/// Optimal barrier under the solvency constraint: `max(beta0*, alpha1)`.
pub fn constrained_barrier_beta1(p: &ModelParams) -> Result<f64> {
    let alpha1 = p.alpha1.ok_or(Error::MissingParameter("alpha1"))?;
    Ok(optimal_barrier_beta0(p).max(alpha1))
}

/// The optimal solvency-constrained value function.
pub fn constrained_value_function(p: &ModelParams) -> Result<ClosedFormValue> {
    ClosedFormValue::new(constrained_barrier_beta1(p)?, p)
}

pub fn value_constrained(x1: f64, x2: f64, p: &ModelParams) -> Result<f64> {
    constrained_value_function(p)?.value(x1, x2)
}
