use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("curve has no pillars")]
    EmptyCurve,
    #[error("non-monotone maturities: pillar {index} at {maturity} does not exceed its predecessor")]
    NonMonotoneMaturities { index: usize, maturity: f64 },
    #[error("non-positive maturity {maturity} at pillar {index}")]
    NonPositiveMaturity { index: usize, maturity: f64 },
    #[error("discount factor {value} at pillar {index} outside (0, 1.5]")]
    DiscountFactorOutOfRange { index: usize, value: f64 },
    #[error("time {t} lies beyond the last pillar {last} and extrapolation is disabled")]
    Extrapolation { t: f64, last: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("pricing failed for quote {index} ({expiry}y x {tenor}y): {source}")]
    Quote {
        index: usize,
        expiry: f64,
        tenor: f64,
        source: alloc::boxed::Box<Error>,
    },
    #[error("market price of risk is singular for rho = {rho}; use the d_x/d_y form of the dynamics")]
    SingularCorrelation { rho: f64 },
    #[error("wrong number of forecasts for {kind} premium: expected {expected}, got {got}")]
    ForecastArity {
        kind: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("forecast ordering violated: {0}")]
    ForecastOrdering(String),
    #[error("ill-conditioned forecast system (condition number {condition:e}); near-colinear forecasts {first} and {second}")]
    SingularForecasts {
        condition: f64,
        first: usize,
        second: usize,
    },
    #[error("linear premium has degenerate slope: |{which}| = {value:e} is too small; use the step kind")]
    DegenerateSlope { which: &'static str, value: f64 },
}
