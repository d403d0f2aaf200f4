//! Market inputs: discount curves, swaption quotes and rate forecasts.
//!
//! Discount factors are interpolated log-linearly, which is the same as
//! holding the instantaneous forward rate flat between pillars. All rates are
//! continuously compounded and all times are year fractions.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{exp, ln};

/// Largest discount factor accepted at a pillar. Values above one allow
/// moderately negative rates.
pub const MAX_DISCOUNT_FACTOR: f64 = 1.5;

/// A plain calendar date. Only carried along for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CalendarDate {
    pub year: i32,
    pub month: u8,
    pub day: u8,
}

impl CalendarDate {
    pub fn new(year: i32, month: u8, day: u8) -> Result<Self> {
        if !(1..=12).contains(&month) || !(1..=31).contains(&day) {
            return Err(Error::InvalidInput(format!(
                "invalid calendar date {year}-{month}-{day}"
            )));
        }
        Ok(Self { year, month, day })
    }
}

impl core::fmt::Display for CalendarDate {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{:04}-{:02}-{:02}", self.year, self.month, self.day)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscountCurve {
    valuation_date: Option<CalendarDate>,
    maturities: Vec<f64>,
    discount_factors: Vec<f64>,
    // ln of the discount factors, cached for interpolation
    log_dfs: Vec<f64>,
    extrapolate: bool,
}

impl DiscountCurve {
    /// Builds a curve from `(maturity, discount factor)` pillars. The point
    /// `(0, 1)` is implicit and must not be supplied.
    pub fn new(pillars: &[(f64, f64)]) -> Result<Self> {
        if pillars.is_empty() {
            return Err(Error::EmptyCurve);
        }
        let mut maturities = Vec::with_capacity(pillars.len());
        let mut discount_factors = Vec::with_capacity(pillars.len());
        let mut prev = 0.0;
        for (index, &(maturity, df)) in pillars.iter().enumerate() {
            if !maturity.is_finite() {
                return Err(Error::NonPositiveMaturity { index, maturity });
            }
            if index == 0 && maturity <= 0.0 {
                return Err(Error::NonPositiveMaturity { index, maturity });
            }
            if index > 0 && maturity <= prev {
                return Err(Error::NonMonotoneMaturities { index, maturity });
            }
            if !(df > 0.0 && df <= MAX_DISCOUNT_FACTOR) {
                return Err(Error::DiscountFactorOutOfRange { index, value: df });
            }
            prev = maturity;
            maturities.push(maturity);
            discount_factors.push(df);
        }
        let log_dfs = discount_factors.iter().map(|&df| ln(df)).collect();
        Ok(Self {
            valuation_date: None,
            maturities,
            discount_factors,
            log_dfs,
            extrapolate: false,
        })
    }

    /// Builds a curve from continuously compounded zero rates, `df = exp(-r T)`.
    pub fn from_zero_rates(pillars: &[(f64, f64)]) -> Result<Self> {
        let dfs: Vec<(f64, f64)> = pillars.iter().map(|&(t, r)| (t, exp(-r * t))).collect();
        Self::new(&dfs)
    }

    /// A curve with a single flat continuously compounded rate up to `last`.
    pub fn flat(rate: f64, last: f64) -> Result<Self> {
        Self::from_zero_rates(&[(last, rate)])
    }

    pub fn with_valuation_date(mut self, date: CalendarDate) -> Self {
        self.valuation_date = Some(date);
        self
    }

    /// Enables flat-forward extrapolation beyond the last pillar.
    pub fn with_extrapolation(mut self, enabled: bool) -> Self {
        self.extrapolate = enabled;
        self
    }

    pub fn valuation_date(&self) -> Option<CalendarDate> {
        self.valuation_date
    }

    pub fn extrapolates(&self) -> bool {
        self.extrapolate
    }

    pub fn last_maturity(&self) -> f64 {
        self.maturities[self.maturities.len() - 1]
    }

    /// Iterates the stored `(maturity, discount factor)` pillars.
    pub fn pillars(&self) -> impl ExactSizeIterator<Item = (f64, f64)> + '_ {
        self.maturities
            .iter()
            .copied()
            .zip(self.discount_factors.iter().copied())
    }

    /// Checks that `t` lies inside the domain the curve can evaluate.
    pub fn check_domain(&self, t: f64) -> Result<()> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!("negative or non-finite time {t}")));
        }
        let last = self.last_maturity();
        if t > last && !self.extrapolate {
            return Err(Error::Extrapolation { t, last });
        }
        Ok(())
    }

    /// `ln df(t)`. Exact at pillars, linear in between.
    pub fn log_discount(&self, t: f64) -> Result<f64> {
        self.check_domain(t)?;
        if t == 0.0 {
            return Ok(0.0);
        }
        let n = self.maturities.len();
        let last = self.maturities[n - 1];
        if t >= last {
            if t == last {
                return Ok(self.log_dfs[n - 1]);
            }
            let fwd = self.segment_forward(n - 1);
            return Ok(self.log_dfs[n - 1] - fwd * (t - last));
        }
        // first index with maturity >= t
        let hi = self.maturities.partition_point(|&m| m < t);
        if self.maturities[hi] == t {
            return Ok(self.log_dfs[hi]);
        }
        let (t0, l0) = if hi == 0 {
            (0.0, 0.0)
        } else {
            (self.maturities[hi - 1], self.log_dfs[hi - 1])
        };
        let (t1, l1) = (self.maturities[hi], self.log_dfs[hi]);
        let w = (t - t0) / (t1 - t0);
        Ok(l0 + w * (l1 - l0))
    }

    /// Discount factor `df(t)` with `df(0) = 1`.
    pub fn discount(&self, t: f64) -> Result<f64> {
        self.check_domain(t)?;
        if t == 0.0 {
            return Ok(1.0);
        }
        if let Ok(i) = self.maturities.binary_search_by(|m| m.total_cmp(&t)) {
            return Ok(self.discount_factors[i]);
        }
        Ok(exp(self.log_discount(t)?))
    }

    /// Continuously compounded spot rate `-ln df(t) / t`.
    pub fn spot_rate(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!(
                "spot rate needs a positive maturity, got {t}"
            )));
        }
        Ok(-self.log_discount(t)? / t)
    }

    /// Instantaneous forward rate at `t`, right-continuous at pillars.
    pub fn instantaneous_forward(&self, t: f64) -> Result<f64> {
        self.check_domain(t)?;
        let n = self.maturities.len();
        let seg = self.maturities.partition_point(|&m| m <= t);
        Ok(self.segment_forward(seg.min(n - 1)))
    }

    /// `ln(df(t) / df(T))`, the integrated forward rate over `[t, T]`.
    pub fn integrated_forward(&self, t: f64, maturity: f64) -> Result<f64> {
        Ok(self.log_discount(t)? - self.log_discount(maturity)?)
    }

    // Flat forward on the segment ending at pillar `i`.
    fn segment_forward(&self, i: usize) -> f64 {
        let (t0, l0) = if i == 0 {
            (0.0, 0.0)
        } else {
            (self.maturities[i - 1], self.log_dfs[i - 1])
        };
        -(self.log_dfs[i] - l0) / (self.maturities[i] - t0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QuoteKind {
    Price,
    NormalVol,
}

/// A market quote on a European swaption of the calibration grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwaptionQuote {
    pub expiry_years: f64,
    pub tenor_years: f64,
    pub quote: f64,
    pub quote_kind: QuoteKind,
    /// Fixed rate of the underlying swap; `None` means at the money.
    pub strike: Option<f64>,
}

impl SwaptionQuote {
    pub fn new(expiry_years: f64, tenor_years: f64, quote: f64, quote_kind: QuoteKind) -> Result<Self> {
        let q = Self {
            expiry_years,
            tenor_years,
            quote,
            quote_kind,
            strike: None,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn with_strike(mut self, strike: f64) -> Self {
        self.strike = Some(strike);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.expiry_years > 0.0) || !(self.tenor_years > 0.0) {
            return Err(Error::InvalidInput(format!(
                "swaption expiry and tenor must be positive, got {} x {}",
                self.expiry_years, self.tenor_years
            )));
        }
        if !(self.quote >= 0.0) || !self.quote.is_finite() {
            return Err(Error::InvalidInput(format!(
                "swaption quote must be non-negative, got {}",
                self.quote
            )));
        }
        Ok(())
    }
}

/// Point forecast of the continuously compounded rate `r(t, T)` seen today.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateForecast {
    pub horizon_years: f64,
    pub maturity_years: f64,
    pub rate: f64,
}

impl RateForecast {
    pub fn new(horizon_years: f64, maturity_years: f64, rate: f64) -> Result<Self> {
        if !(horizon_years >= 0.0) || !(maturity_years > horizon_years) || !rate.is_finite() {
            return Err(Error::InvalidInput(format!(
                "forecast needs 0 <= t < T and a finite rate, got t={horizon_years}, T={maturity_years}, r={rate}"
            )));
        }
        Ok(Self {
            horizon_years,
            maturity_years,
            rate,
        })
    }

    pub fn tenor(&self) -> f64 {
        self.maturity_years - self.horizon_years
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_zero_rates_convert_to_discount_factors() {
        let c = DiscountCurve::from_zero_rates(&[(1.0, 0.01), (10.0, 0.01)]).unwrap();
        assert_eq!(c.discount(10.0).unwrap(), exp(-0.1));
        assert_eq!(c.discount(1.0).unwrap(), exp(-0.01));
    }

    #[test]
    fn rejects_out_of_order_and_bad_values() {
        assert!(matches!(
            DiscountCurve::new(&[(2.0, 0.98), (1.0, 0.99)]),
            Err(Error::NonMonotoneMaturities { index: 1, .. })
        ));
        assert!(matches!(
            DiscountCurve::new(&[(1.0, 0.0)]),
            Err(Error::DiscountFactorOutOfRange { .. })
        ));
        assert!(matches!(
            DiscountCurve::new(&[(0.0, 1.0)]),
            Err(Error::NonPositiveMaturity { .. })
        ));
        assert_eq!(DiscountCurve::new(&[]), Err(Error::EmptyCurve));
    }

    #[test]
    fn negative_short_rates_are_accepted() {
        let c = DiscountCurve::from_zero_rates(&[(0.25, -0.004), (10.0, 0.004)]).unwrap();
        let df = c.discount(0.25).unwrap();
        assert!((df - exp(0.001)).abs() < 1e-15);
        assert!(df > 1.0);
    }

    #[test]
    fn interpolation_is_log_linear() {
        let c = DiscountCurve::new(&[(1.0, 0.99), (3.0, 0.95)]).unwrap();
        assert_eq!(c.discount(0.0).unwrap(), 1.0);
        assert_eq!(c.discount(3.0).unwrap(), 0.95);
        let expected = exp((ln(0.99) + ln(0.95)) / 2.0);
        assert!((c.discount(2.0).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn extrapolation_needs_the_flag() {
        let c = DiscountCurve::new(&[(1.0, 0.99), (3.0, 0.95)]).unwrap();
        assert!(matches!(c.discount(4.0), Err(Error::Extrapolation { .. })));
        let c = c.with_extrapolation(true);
        let fwd = c.instantaneous_forward(2.5).unwrap();
        let expected = exp(ln(0.95) - fwd);
        assert!((c.discount(4.0).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn spot_rates() {
        let c = DiscountCurve::new(&[(0.25, 1.001), (10.0, exp(-0.2))]).unwrap();
        assert!((c.spot_rate(10.0).unwrap() - 0.02).abs() < 1e-15);
        let r = c.spot_rate(0.25).unwrap();
        assert!((r - (-ln(1.001) / 0.25)).abs() < 1e-15);
        assert!((r + 0.003_998).abs() < 1e-6);
        assert!(matches!(c.spot_rate(0.0), Err(Error::Domain(_))));
        let one = DiscountCurve::new(&[(5.0, 1.0)]).unwrap();
        assert_eq!(one.spot_rate(5.0).unwrap(), 0.0);
    }

    #[test]
    fn forwards_are_flat_between_pillars() {
        let c = DiscountCurve::new(&[(1.0, 0.99), (3.0, 0.95), (7.0, 0.80)]).unwrap();
        let f = |t0: f64, t1: f64| c.integrated_forward(t0, t1).unwrap() / (t1 - t0);
        assert!((f(1.1, 1.5) - f(2.0, 2.9)).abs() < 1e-13);
        assert!((f(3.2, 3.3) - c.instantaneous_forward(5.0).unwrap()).abs() < 1e-13);
        assert!((c.instantaneous_forward(3.0).unwrap() - f(3.0, 7.0)).abs() < 1e-13);
    }
}
