//! Two-factor additive Gaussian short-rate model (G2++ / two-factor Hull-White)
//! usable under both the risk-neutral measure ℚ and a real-world measure ℙ.
//!
//! The short rate is `r(t) = x(t) + y(t) + φ(t)` with two correlated
//! Ornstein-Uhlenbeck factors. Under ℙ the factors revert to time-dependent
//! levels `d_x(t)`, `d_y(t)` (the local long-run risk premia); the zero-coupon
//! bond formula is the same under both measures, only the law of `(x, y)`
//! changes.
//!
//! Modules:
//!
//! * [`curve`]: discount curves, swaption quotes and rate forecasts.
//! * [`model`]: loadings, integrated variance, integrated shift, bond prices.
//! * [`pricing`]: Bachelier and semi-analytic G2++ swaption prices.
//! * [`calibration`]: risk-neutral calibration to a swaption grid.
//! * [`measure`]: risk-premium functions, expected rates under ℙ and their
//!   calibration to forecasts.
//! * [`simulate`]: exact-transition Monte Carlo and martingale/moment checks.
//!
//! The crate is `no_std` and only needs `alloc`; file formats and the command
//! line live in the `g2pp` crate.

#![no_std]
// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod calibration;
pub mod curve;
mod error;
pub mod linalg;
mod math;
pub mod measure;
pub mod model;
pub mod pricing;
pub mod quadrature;
pub mod simplex;
pub mod simulate;
pub mod stats;

pub use crate::calibration::{calibrate_q, objective, CalibrationQResult, SimplexConfig};
pub use crate::curve::{CalendarDate, DiscountCurve, QuoteKind, RateForecast, SwaptionQuote};
pub use crate::error::{Error, Result};
pub use crate::measure::{
    calibrate_p, expected_rate_p, expected_rate_q, market_price_of_risk, MarketPriceOfRisk,
    PremiumKind, PremiumSpec,
};
pub use crate::model::{FactorState, G2Params};
pub use crate::pricing::{ExerciseType, SwaptionSpec};
pub use crate::simulate::{Measure, ScenarioSet, SimConfig};
