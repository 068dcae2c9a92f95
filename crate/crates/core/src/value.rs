//! Shared machinery for degree-1 homogeneous value functions.
//!
//! Every value function in this crate has the form `V(x1, x2) = x2 * h(x1 / x2)`
//! where `h` is piecewise: a two-term power solution on the continuation
//! interval and linear pieces outside it. Partial derivatives in `(x1, x2)`
//! follow from `h`, `h'` and `h''` alone.

use crate::closed_form::Exponents;
use crate::error::{Error, Result};

/// `exp(z * ln r)`. Powers are always formed this way so very negative
/// exponents and large ratios stay representable.
#[inline]
pub(crate) fn pow_ratio(r: f64, z: f64) -> f64 {
    (z * r.ln()).exp()
}

/// Which piece of a piecewise value function a point falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Below the injection barrier: capital is injected immediately.
    Injection,
    /// Between the barriers (or between the ruin level and the dividend
    /// barrier). Both barrier points themselves belong here.
    Continuation,
    /// Above the dividend barrier: the overshoot is paid immediately.
    AboveBarrier,
}

impl Branch {
    pub fn label(self) -> &'static str {
        match self {
            Branch::Injection => "injection",
            Branch::Continuation => "continuation",
            Branch::AboveBarrier => "above-barrier",
        }
    }
}

/// Value and partial derivatives at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Partials {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
    pub d11: f64,
    pub d22: f64,
    pub d12: f64,
}

/// `h(y) = k1 (y/anchor)^z1 + k2 (y/anchor)^z2`, the general solution of
/// `(A - delta) V = 0` written per unit of liabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct PowerSolution {
    pub anchor: f64,
    pub k1: f64,
    pub k2: f64,
    pub z1: f64,
    pub z2: f64,
}

impl PowerSolution {
    pub fn new(exponents: &Exponents, anchor: f64, k1: f64, k2: f64) -> Self {
        Self {
            anchor,
            k1,
            k2,
            z1: exponents.zeta1,
            z2: exponents.zeta2,
        }
    }

    pub fn h(&self, y: f64) -> f64 {
        let u = y / self.anchor;
        self.k1 * pow_ratio(u, self.z1) + self.k2 * pow_ratio(u, self.z2)
    }

    pub fn dh(&self, y: f64) -> f64 {
        let u = y / self.anchor;
        (self.k1 * self.z1 * pow_ratio(u, self.z1 - 1.0)
            + self.k2 * self.z2 * pow_ratio(u, self.z2 - 1.0))
            / self.anchor
    }

    pub fn d2h(&self, y: f64) -> f64 {
        let u = y / self.anchor;
        (self.k1 * self.z1 * (self.z1 - 1.0) * pow_ratio(u, self.z1 - 2.0)
            + self.k2 * self.z2 * (self.z2 - 1.0) * pow_ratio(u, self.z2 - 2.0))
            / (self.anchor * self.anchor)
    }

    /// Coefficients of `x1^z x2^(1-z)`, i.e. with the anchor folded in.
    pub fn raw_coefficients(&self) -> (f64, f64) {
        (
            self.k1 * pow_ratio(self.anchor, -self.z1),
            self.k2 * pow_ratio(self.anchor, -self.z2),
        )
    }

    pub fn partials(&self, x1: f64, x2: f64) -> Partials {
        let y = x1 / x2;
        let h = self.h(y);
        let dh = self.dh(y);
        let d2h = self.d2h(y);
        Partials {
            value: x2 * h,
            d1: dh,
            d2: h - y * dh,
            d11: d2h / x2,
            d22: y * y * d2h / x2,
            d12: -y * d2h / x2,
        }
    }
}

/// A degree-1 homogeneous value function defined on funding ratios at or
/// above `floor()`.
pub trait ValueFunction: Sync {
    fn value(&self, x1: f64, x2: f64) -> Result<f64> {
        Ok(self.partials(x1, x2)?.value)
    }

    /// Exact partial derivatives of the active branch.
    fn partials(&self, x1: f64, x2: f64) -> Result<Partials>;

    fn branch(&self, x1: f64, x2: f64) -> Result<Branch>;

    /// Ratios where the function is only C^1.
    fn seams(&self) -> Vec<f64>;

    /// Smallest admissible funding ratio.
    fn floor(&self) -> f64;
}

pub(crate) fn check_point(x1: f64, x2: f64, floor: f64) -> Result<f64> {
    if !(x2 > 0.0) || !x2.is_finite() || !x1.is_finite() {
        return Err(Error::domain(format!(
            "need finite x1 and x2 > 0 (got x1 = {x1}, x2 = {x2})"
        )));
    }
    let y = x1 / x2;
    if y < floor {
        return Err(Error::domain(format!(
            "funding ratio {y} is below the ruin level {floor}"
        )));
    }
    Ok(y)
}
