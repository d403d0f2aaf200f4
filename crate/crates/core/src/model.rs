//! Closed-form G2++ quantities shared by both measures.
//!
//! The deterministic shift φ is never stored. The bond-price formula at
//! `t = 0, x = y = 0` must reproduce the market curve, which pins
//!
//! ```text
//! ∫_t^T φ(s) ds = ln(df(t) / df(T)) + ½ [V(0,T) − V(0,t)]
//! ```
//!
//! and that integral is all the pricing formulas ever need.

use alloc::format;

use crate::curve::DiscountCurve;
use crate::error::{Error, Result};
use crate::math::{exp, expm1};

/// Risk-neutral dynamics constants:
///
/// ```text
/// dx = −a x dt + σ dW¹,   dy = −b y dt + η dW²,   dW¹ dW² = ρ dt
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct G2Params {
    pub a: f64,
    pub b: f64,
    pub sigma: f64,
    pub eta: f64,
    pub rho: f64,
}

impl G2Params {
    pub fn new(a: f64, b: f64, sigma: f64, eta: f64, rho: f64) -> Result<Self> {
        let p = Self {
            a,
            b,
            sigma,
            eta,
            rho,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.a > 0.0
            && self.b > 0.0
            && self.sigma >= 0.0
            && self.eta >= 0.0
            && (-1.0..=1.0).contains(&self.rho)
            && self.a.is_finite()
            && self.b.is_finite()
            && self.sigma.is_finite()
            && self.eta.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("{self:?}")))
        }
    }

    /// The model is symmetric under `(a, σ, x) ↔ (b, η, y)`. Returns the
    /// representative with `a >= b`.
    pub fn canonical(self) -> Self {
        if self.a >= self.b {
            self
        } else {
            Self {
                a: self.b,
                b: self.a,
                sigma: self.eta,
                eta: self.sigma,
                rho: self.rho,
            }
        }
    }

    /// Variance of `∫_t^T (x + y) du` given the state at `t`.
    pub fn integrated_variance(&self, t: f64, maturity: f64) -> f64 {
        integrated_variance(self, t, maturity)
    }
}

/// Time and factor values. Both factors start at zero at valuation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FactorState {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

impl FactorState {
    pub const fn new(t: f64, x: f64, y: f64) -> Self {
        Self { t, x, y }
    }

    pub const fn origin() -> Self {
        Self {
            t: 0.0,
            x: 0.0,
            y: 0.0,
        }
    }
}

/// `B(z, t, T) = (1 − e^{−z(T−t)}) / z`.
///
/// Evaluated through `expm1`, so it stays accurate for `z (T − t) → 0`.
#[inline]
pub fn b_loading(z: f64, t: f64, maturity: f64) -> f64 {
    debug_assert!(z > 0.0);
    loading(z, maturity - t)
}

#[inline]
pub(crate) fn loading(z: f64, tau: f64) -> f64 {
    -expm1(-z * tau) / z
}

/// `V(t, T)`, the variance of `∫_t^T (x(u) + y(u)) du` conditional on the
/// state at `t`. Depends on `T − t` only.
pub fn integrated_variance(p: &G2Params, t: f64, maturity: f64) -> f64 {
    let tau = maturity - t;
    if tau <= 0.0 {
        return 0.0;
    }
    let (a, b) = (p.a, p.b);
    let ba = loading(a, tau);
    let bb = loading(b, tau);
    // tau + 2/a e^{-a tau} - 1/(2a) e^{-2 a tau} - 3/(2a), rearranged
    let xx = tau - 2.0 * ba + loading(2.0 * a, tau);
    let yy = tau - 2.0 * bb + loading(2.0 * b, tau);
    let xy = tau - ba - bb + loading(a + b, tau);
    let v = p.sigma * p.sigma / (a * a) * xx
        + p.eta * p.eta / (b * b) * yy
        + 2.0 * p.rho * p.sigma * p.eta / (a * b) * xy;
    v.max(0.0)
}

/// `∂V(0, t)/∂t = σ²B(a)² + η²B(b)² + 2ρση B(a)B(b)` with loadings on `[0, t]`.
pub(crate) fn variance_rate(p: &G2Params, t: f64) -> f64 {
    let ba = loading(p.a, t);
    let bb = loading(p.b, t);
    p.sigma * p.sigma * ba * ba + p.eta * p.eta * bb * bb + 2.0 * p.rho * p.sigma * p.eta * ba * bb
}

/// `∫_t^T φ(s) ds`, implied by an exact fit to the initial curve.
pub fn integrated_phi(curve: &DiscountCurve, p: &G2Params, t: f64, maturity: f64) -> Result<f64> {
    if maturity < t {
        return Err(Error::Domain(format!("maturity {maturity} before {t}")));
    }
    if maturity == t {
        curve.check_domain(t)?;
        return Ok(0.0);
    }
    Ok(curve.integrated_forward(t, maturity)?
        + 0.5 * (integrated_variance(p, 0.0, maturity) - integrated_variance(p, 0.0, t)))
}

/// Pointwise shift `φ(t) = f(0, t) + ½ ∂V(0,t)/∂t`, using the curve's
/// piecewise-flat forwards. Only needed to report short rates on a grid.
pub fn phi(curve: &DiscountCurve, p: &G2Params, t: f64) -> Result<f64> {
    Ok(curve.instantaneous_forward(t)? + 0.5 * variance_rate(p, t))
}

/// `−ln P(t, T)`, the exponent of the bond-price formula.
fn neg_log_bond(curve: &DiscountCurve, p: &G2Params, s: &FactorState, maturity: f64) -> Result<f64> {
    if maturity < s.t {
        return Err(Error::Domain(format!(
            "bond maturity {maturity} before state time {}",
            s.t
        )));
    }
    let phi_int = integrated_phi(curve, p, s.t, maturity)?;
    Ok(phi_int + b_loading(p.a, s.t, maturity) * s.x + b_loading(p.b, s.t, maturity) * s.y
        - 0.5 * integrated_variance(p, s.t, maturity))
}

/// Zero-coupon bond price
///
/// ```text
/// P(t,T) = exp(−∫_t^T φ − B(a,t,T) x(t) − B(b,t,T) y(t) + ½ V(t,T))
/// ```
///
/// The same formula holds under ℚ and under ℙ; only the law of `(x, y)`
/// differs between the two.
pub fn bond_price(curve: &DiscountCurve, p: &G2Params, s: &FactorState, maturity: f64) -> Result<f64> {
    if maturity == s.t {
        curve.check_domain(maturity)?;
        return Ok(1.0);
    }
    Ok(exp(-neg_log_bond(curve, p, s, maturity)?))
}

/// Continuously compounded model rate `r(t, T) = −ln P(t,T) / (T − t)`.
pub fn model_rate(curve: &DiscountCurve, p: &G2Params, s: &FactorState, maturity: f64) -> Result<f64> {
    if !(maturity > s.t) {
        return Err(Error::Domain(format!(
            "model rate needs T > t, got t={}, T={maturity}",
            s.t
        )));
    }
    Ok(neg_log_bond(curve, p, s, maturity)? / (maturity - s.t))
}
