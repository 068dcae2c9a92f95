use thiserror::Error;

/// A violated parameter invariant. One variant per invariant, carrying the
/// offending field and the bound it failed.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("{field} must be finite (got {value})")]
    NonFinite { field: &'static str, value: f64 },
    #[error("{field} must be strictly positive (got {value})")]
    NonPositiveVolatility { field: &'static str, value: f64 },
    #[error("rho must lie strictly inside (-1, 1) (got {value})")]
    CorrelationOutOfRange { value: f64 },
    #[error("profitability condition mu_A > mu_L violated (mu_A = {mu_a}, mu_L = {mu_l})")]
    ProfitabilityViolated { mu_a: f64, mu_l: f64 },
    #[error(
        "discount rate must exceed the asset drift, delta > mu_A (delta = {delta}, mu_A = {mu_a})"
    )]
    DiscountTooLow { delta: f64, mu_a: f64 },
    #[error("delta must be strictly positive (got {value})")]
    NonPositiveDiscount { value: f64 },
    #[error("ruin level alpha0 must be strictly positive (got {value})")]
    NonPositiveRuinLevel { value: f64 },
    #[error("solvency level alpha1 must exceed alpha0 (alpha1 = {alpha1}, alpha0 = {alpha0})")]
    SolvencyLevelTooLow { alpha1: f64, alpha0: f64 },
    #[error("injection cost kappa must be strictly greater than 1 (got {value})")]
    InjectionCostTooLow { value: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("missing parameter: {0}")]
    MissingParameter(&'static str),
    #[error("no sign change of the barrier equation below {cap} (numerics bug)")]
    BracketFailure { cap: f64 },
    #[error("no break-even injection cost: {0}")]
    NoBreakeven(String),
    #[error("monotonicity assumption violated: {0}")]
    MonotonicityViolated(String),
    #[error("finite-difference stencil at ratio {ratio} straddles the seam at {seam}")]
    Seam { ratio: f64, seam: f64 },
    #[error("invalid simulation setup: {0}")]
    Config(String),
    #[error("cannot summarize an empty sample")]
    EmptyInput,
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
