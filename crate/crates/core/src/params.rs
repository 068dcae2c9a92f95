//! Model parameterization shared by every other module.
//!
//! Assets `X1` and liabilities `X2` follow a correlated bivariate geometric
//! Brownian motion; the state that matters is the funding ratio `X1 / X2`.
//! [`ModelParams`] is plain data. [`ModelParams::validate`] checks every
//! invariant the closed forms rely on and rejects boundary values outright.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::error::ParamError;

/// Market and model constants.
///
/// `alpha1` is only needed by the solvency-constrained problem and `kappa`
/// only by the capital-injection problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Asset drift per unit time.
    pub mu_a: f64,
    /// Liability drift per unit time.
    pub mu_l: f64,
    /// Asset volatility.
    pub sigma_a: f64,
    /// Liability volatility.
    pub sigma_l: f64,
    /// Instantaneous correlation between the two Brownian drivers.
    pub rho: f64,
    /// Discount rate.
    pub delta: f64,
    /// Ruin funding-ratio level.
    pub alpha0: f64,
    /// Solvency-constraint level: no dividend may leave the ratio below it.
    pub alpha1: Option<f64>,
    /// Proportional cost of one unit of injected capital.
    pub kappa: Option<f64>,
}

/// Keys accepted in configuration files and on the command line, in the
/// order they are echoed.
pub const FIELD_NAMES: [&str; 9] = [
    "mu_A", "mu_L", "sigma_A", "sigma_L", "rho", "delta", "alpha0", "alpha1", "kappa",
];

impl ModelParams {
    pub fn new(
        mu_a: f64,
        mu_l: f64,
        sigma_a: f64,
        sigma_l: f64,
        rho: f64,
        delta: f64,
        alpha0: f64,
    ) -> Self {
        Self {
            mu_a,
            mu_l,
            sigma_a,
            sigma_l,
            rho,
            delta,
            alpha0,
            alpha1: None,
            kappa: None,
        }
    }

    pub fn with_alpha1(mut self, alpha1: f64) -> Self {
        self.alpha1 = Some(alpha1);
        self
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = Some(kappa);
        self
    }

    /// Returns the parameters unchanged if every invariant holds, otherwise
    /// the first violated invariant.
    pub fn validate(self) -> Result<Self, ParamError> {
        let fields = [
            ("mu_A", Some(self.mu_a)),
            ("mu_L", Some(self.mu_l)),
            ("sigma_A", Some(self.sigma_a)),
            ("sigma_L", Some(self.sigma_l)),
            ("rho", Some(self.rho)),
            ("delta", Some(self.delta)),
            ("alpha0", Some(self.alpha0)),
            ("alpha1", self.alpha1),
            ("kappa", self.kappa),
        ];
        for (field, value) in fields {
            if let Some(value) = value {
                if !value.is_finite() {
                    return Err(ParamError::NonFinite { field, value });
                }
            }
        }
        if self.sigma_a <= 0.0 {
            return Err(ParamError::NonPositiveVolatility {
                field: "sigma_A",
                value: self.sigma_a,
            });
        }
        if self.sigma_l <= 0.0 {
            return Err(ParamError::NonPositiveVolatility {
                field: "sigma_L",
                value: self.sigma_l,
            });
        }
        if !(self.rho > -1.0 && self.rho < 1.0) {
            return Err(ParamError::CorrelationOutOfRange { value: self.rho });
        }
        if self.mu_a <= self.mu_l {
            return Err(ParamError::ProfitabilityViolated {
                mu_a: self.mu_a,
                mu_l: self.mu_l,
            });
        }
        if self.delta <= 0.0 {
            return Err(ParamError::NonPositiveDiscount { value: self.delta });
        }
        if self.delta <= self.mu_a {
            return Err(ParamError::DiscountTooLow {
                delta: self.delta,
                mu_a: self.mu_a,
            });
        }
        if self.alpha0 <= 0.0 {
            return Err(ParamError::NonPositiveRuinLevel { value: self.alpha0 });
        }
        if let Some(alpha1) = self.alpha1 {
            if alpha1 <= self.alpha0 {
                return Err(ParamError::SolvencyLevelTooLow {
                    alpha1,
                    alpha0: self.alpha0,
                });
            }
        }
        if let Some(kappa) = self.kappa {
            if kappa <= 1.0 {
                return Err(ParamError::InjectionCostTooLow { value: kappa });
            }
        }
        Ok(self)
    }

    /// Variance rate of the log funding ratio.
    pub fn sigma_tilde_sq(&self) -> f64 {
        // (sigma_A - sigma_L)^2 + 2(1 - rho) sigma_A sigma_L avoids cancellation
        // when the two volatilities are close and rho is near 1.
        let diff = self.sigma_a - self.sigma_l;
        diff * diff + 2.0 * (1.0 - self.rho) * self.sigma_a * self.sigma_l
    }

    /// Looks up a field by its configuration key.
    pub fn get(&self, key: &str) -> Option<f64> {
        match key {
            "mu_A" => Some(self.mu_a),
            "mu_L" => Some(self.mu_l),
            "sigma_A" => Some(self.sigma_a),
            "sigma_L" => Some(self.sigma_l),
            "rho" => Some(self.rho),
            "delta" => Some(self.delta),
            "alpha0" => Some(self.alpha0),
            "alpha1" => self.alpha1,
            "kappa" => self.kappa,
            _ => None,
        }
    }

    /// Sets a field by its configuration key.
    pub fn set(&mut self, key: &str, value: f64) -> Result<(), KeyValueError> {
        match key {
            "mu_A" => self.mu_a = value,
            "mu_L" => self.mu_l = value,
            "sigma_A" => self.sigma_a = value,
            "sigma_L" => self.sigma_l = value,
            "rho" => self.rho = value,
            "delta" => self.delta = value,
            "alpha0" => self.alpha0 = value,
            "alpha1" => self.alpha1 = Some(value),
            "kappa" => self.kappa = Some(value),
            other => return Err(KeyValueError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Builds parameters from a key/value map. The seven core fields are
    /// required; `alpha1` and `kappa` are optional. No validation is done.
    pub fn from_map(map: &BTreeMap<String, f64>) -> Result<Self, KeyValueError> {
        let mut p = ModelParams::new(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for key in &FIELD_NAMES[..7] {
            if !map.contains_key(*key) {
                return Err(KeyValueError::MissingKey(key));
            }
        }
        for (key, value) in map {
            p.set(key, *value)?;
        }
        Ok(p)
    }
}

impl fmt::Display for ModelParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for key in FIELD_NAMES {
            if let Some(v) = self.get(key) {
                writeln!(f, "{key}={v}")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KeyValueError {
    #[error("line {line}: expected `key = value`")]
    Malformed { line: usize },
    #[error("line {line}: `{text}` is not a decimal number")]
    BadNumber { line: usize, text: String },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
    #[error("unknown parameter `{0}`")]
    UnknownKey(String),
    #[error("missing required parameter `{0}`")]
    MissingKey(&'static str),
}

/// Parses flat `key = value` text. Blank lines and `#` comments are skipped;
/// `key: value` is accepted as well.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, f64>, KeyValueError> {
    let mut out = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .or_else(|| line.split_once(':'))
            .ok_or(KeyValueError::Malformed { line: line_no })?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() {
            return Err(KeyValueError::Malformed { line: line_no });
        }
        let parsed: f64 = value.parse().map_err(|_| KeyValueError::BadNumber {
            line: line_no,
            text: value.to_string(),
        })?;
        if out.insert(key.to_string(), parsed).is_some() {
            return Err(KeyValueError::Duplicate {
                line: line_no,
                key: key.to_string(),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p1() -> ModelParams {
        ModelParams::new(0.05, 0.02, 0.3, 0.1, 0.0, 0.06, 1.0)
            .with_alpha1(1.2)
            .with_kappa(1.05)
    }

    #[test]
    fn reference_set_is_accepted() {
        assert_eq!(p1().validate(), Ok(p1()));
    }

    #[test]
    fn boundary_values_are_rejected() {
        let mut p = p1();
        p.mu_a = 0.02;
        assert!(matches!(
            p.validate(),
            Err(ParamError::ProfitabilityViolated { .. })
        ));

        let mut p = p1();
        p.delta = 0.05;
        assert!(matches!(
            p.validate(),
            Err(ParamError::DiscountTooLow { .. })
        ));

        let mut p = p1();
        p.rho = 1.0;
        assert!(matches!(
            p.validate(),
            Err(ParamError::CorrelationOutOfRange { .. })
        ));
        p.rho = -1.0;
        assert!(matches!(
            p.validate(),
            Err(ParamError::CorrelationOutOfRange { .. })
        ));

        let p = p1().with_alpha1(1.0);
        assert!(matches!(
            p.validate(),
            Err(ParamError::SolvencyLevelTooLow { .. })
        ));

        let p = p1().with_kappa(1.0);
        assert!(matches!(
            p.validate(),
            Err(ParamError::InjectionCostTooLow { .. })
        ));

        let mut p = p1();
        p.sigma_l = 0.0;
        assert!(matches!(
            p.validate(),
            Err(ParamError::NonPositiveVolatility {
                field: "sigma_L",
                ..
            })
        ));

        let mut p = p1();
        p.alpha0 = 0.0;
        // alpha1 = 1.2 > 0 still, so the ruin level is what trips
        assert!(matches!(
            p.validate(),
            Err(ParamError::NonPositiveRuinLevel { .. })
        ));

        let mut p = p1();
        p.mu_l = f64::NAN;
        assert!(matches!(
            p.validate(),
            Err(ParamError::NonFinite { field: "mu_L", .. })
        ));
    }

    #[test]
    fn optional_fields_are_optional() {
        let p = ModelParams::new(0.05, 0.02, 0.3, 0.1, 0.0, 0.06, 1.0);
        assert!(p.validate().is_ok());
    }

    #[test]
    fn sigma_tilde_matches_direct_formula() {
        let p = ModelParams::new(0.05, 0.02, 0.3, 0.2, 0.4, 0.06, 1.0);
        let direct = 0.09 + 0.04 - 2.0 * 0.4 * 0.3 * 0.2;
        assert!((p.sigma_tilde_sq() - direct).abs() < 1e-15);
    }

    #[test]
    fn key_value_round_trip() {
        let text =
            "# reference set\nmu_A = 0.05\nmu_L=0.02\nsigma_A: 0.3\nsigma_L = 0.1\nrho = 0\n\
                    delta = 0.06\nalpha0 = 1   # ruin\nkappa = 1.05\n";
        let map = parse_key_values(text).unwrap();
        let p = ModelParams::from_map(&map).unwrap();
        assert_eq!(p, p1().with_kappa(1.05).clone_without_alpha1());
        let echoed = parse_key_values(&p.to_string()).unwrap();
        assert_eq!(ModelParams::from_map(&echoed).unwrap(), p);
    }

    #[test]
    fn key_value_errors() {
        assert_eq!(
            parse_key_values("mu_A 0.05"),
            Err(KeyValueError::Malformed { line: 1 })
        );
        assert!(matches!(
            parse_key_values("mu_A = abc"),
            Err(KeyValueError::BadNumber { line: 1, .. })
        ));
        assert!(matches!(
            parse_key_values("rho = 0\nrho = 0.1"),
            Err(KeyValueError::Duplicate { line: 2, .. })
        ));
        let map = parse_key_values("mu_A = 0.05").unwrap();
        assert_eq!(
            ModelParams::from_map(&map),
            Err(KeyValueError::MissingKey("mu_L"))
        );
        let mut p = p1();
        assert_eq!(
            p.set("beta", 1.0),
            Err(KeyValueError::UnknownKey("beta".into()))
        );
    }

    impl ModelParams {
        fn clone_without_alpha1(mut self) -> Self {
            self.alpha1 = None;
            self
        }
    }
}
