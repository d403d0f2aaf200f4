//! Real-world measure: local long-run risk premia, expected rates under ℙ
//! and their calibration to rate forecasts.
//!
//! Under ℙ the factors follow
//!
//! ```text
//! dx = a (d_x(t) − x) dt + σ dW̃¹,   dy = b (d_y(t) − y) dt + η dW̃²
//! ```
//!
//! so `E^ℙ[x(t)] = RP_x(t) = ∫_0^t e^{−a(t−u)} a d_x(u) du` and
//!
//! ```text
//! E^ℙ[r(t,T)] = E^ℚ[r(t,T)] + B(a,t,T)/(T−t) RP_x(t) + B(b,t,T)/(T−t) RP_y(t)
//! ```
//!
//! The premium functions come in three shapes: constant, a step at `τ`, and
//! a linear ramp reaching the long-run level at `τ` with a continuous slope
//! of `RP` there.

use alloc::format;
use alloc::vec::Vec;

use crate::curve::{DiscountCurve, RateForecast};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::math::{exp, sqrt};
use crate::model::{integrated_phi, integrated_variance, loading, G2Params};

/// Below this `|d|` the linear kind's slope `m = (d − l)/(d τ)` is undefined.
pub const SLOPE_EPS: f64 = 1e-12;
/// Condition number above which forecast systems are rejected.
pub const MAX_CONDITION: f64 = 1e12;
/// `|ρ|` at or above which the market price of risk is singular.
pub const RHO_SINGULAR: f64 = 1.0 - 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PremiumKind {
    Constant,
    Step,
    Linear,
}

impl PremiumKind {
    pub const ALL: [PremiumKind; 3] = [PremiumKind::Constant, PremiumKind::Step, PremiumKind::Linear];

    pub fn name(self) -> &'static str {
        match self {
            PremiumKind::Constant => "constant",
            PremiumKind::Step => "step",
            PremiumKind::Linear => "linear",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "constant" => Some(PremiumKind::Constant),
            "step" => Some(PremiumKind::Step),
            "linear" => Some(PremiumKind::Linear),
            _ => None,
        }
    }

    fn forecasts_needed(self) -> usize {
        match self {
            PremiumKind::Constant => 2,
            _ => 4,
        }
    }
}

impl core::fmt::Display for PremiumKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

/// Local long-run risk premia `d_x(t)`, `d_y(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PremiumSpec {
    Constant {
        d_x: f64,
        d_y: f64,
    },
    /// `d(t) = d` for `t ≤ τ`, `l` afterwards.
    Step {
        d_x: f64,
        d_y: f64,
        l_x: f64,
        l_y: f64,
        tau: f64,
    },
    /// `d(t) = (1 − m t) d` for `t ≤ τ`, `l` afterwards, with
    /// `m = (d − l)/(d τ)`.
    Linear {
        d_x: f64,
        d_y: f64,
        l_x: f64,
        l_y: f64,
        tau: f64,
        m_x: f64,
        m_y: f64,
    },
}

/// One factor's premium function.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Leg {
    d: f64,
    l: f64,
    tau: f64,
    m: f64,
    kind: PremiumKind,
}

fn linear_slope(which: &'static str, d: f64, l: f64, tau: f64) -> Result<f64> {
    if d.abs() < SLOPE_EPS {
        // an identically zero premium is still a well-defined ramp
        if l.abs() < SLOPE_EPS {
            return Ok(0.0);
        }
        return Err(Error::DegenerateSlope { which, value: d.abs() });
    }
    Ok((d - l) / (d * tau))
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("switch time tau must be positive, got {tau}")))
    }
}

impl PremiumSpec {
    /// No premium: ℙ coincides with ℚ.
    pub const ZERO: PremiumSpec = PremiumSpec::Constant { d_x: 0.0, d_y: 0.0 };

    pub fn constant(d_x: f64, d_y: f64) -> Self {
        PremiumSpec::Constant { d_x, d_y }
    }

    pub fn step(d_x: f64, d_y: f64, l_x: f64, l_y: f64, tau: f64) -> Result<Self> {
        check_tau(tau)?;
        Ok(PremiumSpec::Step {
            d_x,
            d_y,
            l_x,
            l_y,
            tau,
        })
    }

    pub fn linear(d_x: f64, d_y: f64, l_x: f64, l_y: f64, tau: f64) -> Result<Self> {
        check_tau(tau)?;
        Ok(PremiumSpec::Linear {
            d_x,
            d_y,
            l_x,
            l_y,
            tau,
            m_x: linear_slope("d_x", d_x, l_x, tau)?,
            m_y: linear_slope("d_y", d_y, l_y, tau)?,
        })
    }

    /// Builds a spec of the given kind from its short/long levels. `tau` and
    /// the long levels are ignored for the constant kind.
    pub fn from_levels(kind: PremiumKind, d_x: f64, d_y: f64, l_x: f64, l_y: f64, tau: f64) -> Result<Self> {
        match kind {
            PremiumKind::Constant => Ok(Self::constant(d_x, d_y)),
            PremiumKind::Step => Self::step(d_x, d_y, l_x, l_y, tau),
            PremiumKind::Linear => Self::linear(d_x, d_y, l_x, l_y, tau),
        }
    }

    pub fn kind(&self) -> PremiumKind {
        match self {
            PremiumSpec::Constant { .. } => PremiumKind::Constant,
            PremiumSpec::Step { .. } => PremiumKind::Step,
            PremiumSpec::Linear { .. } => PremiumKind::Linear,
        }
    }

    pub fn d_x(&self) -> f64 {
        self.leg_x().d
    }

    pub fn d_y(&self) -> f64 {
        self.leg_y().d
    }

    /// Long-run levels; `None` for the constant kind.
    pub fn l_x(&self) -> Option<f64> {
        (self.kind() != PremiumKind::Constant).then(|| self.leg_x().l)
    }

    pub fn l_y(&self) -> Option<f64> {
        (self.kind() != PremiumKind::Constant).then(|| self.leg_y().l)
    }

    pub fn tau(&self) -> Option<f64> {
        match *self {
            PremiumSpec::Constant { .. } => None,
            PremiumSpec::Step { tau, .. } | PremiumSpec::Linear { tau, .. } => Some(tau),
        }
    }

    /// Slopes `(m_x, m_y)` of the linear kind.
    pub fn slopes(&self) -> Option<(f64, f64)> {
        match *self {
            PremiumSpec::Linear { m_x, m_y, .. } => Some((m_x, m_y)),
            _ => None,
        }
    }

    fn leg_x(&self) -> Leg {
        match *self {
            PremiumSpec::Constant { d_x, .. } => Leg::constant(d_x),
            PremiumSpec::Step { d_x, l_x, tau, .. } => Leg {
                d: d_x,
                l: l_x,
                tau,
                m: 0.0,
                kind: PremiumKind::Step,
            },
            PremiumSpec::Linear { d_x, l_x, tau, m_x, .. } => Leg {
                d: d_x,
                l: l_x,
                tau,
                m: m_x,
                kind: PremiumKind::Linear,
            },
        }
    }

    fn leg_y(&self) -> Leg {
        match *self {
            PremiumSpec::Constant { d_y, .. } => Leg::constant(d_y),
            PremiumSpec::Step { d_y, l_y, tau, .. } => Leg {
                d: d_y,
                l: l_y,
                tau,
                m: 0.0,
                kind: PremiumKind::Step,
            },
            PremiumSpec::Linear { d_y, l_y, tau, m_y, .. } => Leg {
                d: d_y,
                l: l_y,
                tau,
                m: m_y,
                kind: PremiumKind::Linear,
            },
        }
    }

    /// `(d_x(t), d_y(t))`. The short-horizon branch applies for `t ≤ τ`.
    pub fn d_value(&self, t: f64) -> (f64, f64) {
        (self.leg_x().value(t), self.leg_y().value(t))
    }

    /// `RP_x(t) = ∫_0^t e^{−a(t−u)} a d_x(u) du`.
    pub fn rp_x(&self, p: &G2Params, t: f64) -> f64 {
        self.leg_x().rp(p.a, t)
    }

    /// `RP_y(t) = ∫_0^t e^{−b(t−u)} b d_y(u) du`.
    pub fn rp_y(&self, p: &G2Params, t: f64) -> f64 {
        self.leg_y().rp(p.b, t)
    }

    /// Deterministic parts of the exact transition over `[t0, t1]`:
    /// `∫_{t0}^{t1} e^{−a(t1−u)} a d_x(u) du` and the `y` analogue.
    pub fn drift(&self, p: &G2Params, t0: f64, t1: f64) -> (f64, f64) {
        (self.leg_x().drift(p.a, t0, t1), self.leg_y().drift(p.b, t0, t1))
    }

    /// `∫_0^T B(a,u,T) a d_x(u) du` and the `y` analogue: the premium part
    /// of the ℙ-numeraire for a bond maturing at `T`. Also equal to
    /// `∫_0^T RP_x(u) du`, the shift of `E^ℙ[∫x]` against ℚ.
    pub fn premium_integrals(&self, p: &G2Params, maturity: f64) -> (f64, f64) {
        let lx = self.leg_x();
        let ly = self.leg_y();
        (
            lx.integral(maturity) - lx.rp(p.a, maturity) / p.a,
            ly.integral(maturity) - ly.rp(p.b, maturity) / p.b,
        )
    }
}

impl Leg {
    fn constant(d: f64) -> Self {
        Leg {
            d,
            l: d,
            tau: f64::INFINITY,
            m: 0.0,
            kind: PremiumKind::Constant,
        }
    }

    fn value(&self, t: f64) -> f64 {
        if t > self.tau {
            return self.l;
        }
        match self.kind {
            PremiumKind::Linear => (1.0 - self.m * t) * self.d,
            _ => self.d,
        }
    }

    fn rp(&self, z: f64, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self.kind {
            PremiumKind::Constant => -crate::math::expm1(-z * t) * self.d,
            PremiumKind::Step => {
                let s = t.min(self.tau);
                let e_ts = exp(-z * (t - s));
                let e_t = exp(-z * t);
                (e_ts - e_t) * self.d + (1.0 - e_ts) * self.l
            }
            PremiumKind::Linear => {
                let s = t.min(self.tau);
                let e_ts = exp(-z * (t - s));
                let e_t = exp(-z * t);
                ((e_ts - e_t) * (1.0 + self.m / z) - e_ts * self.m * s) * self.d + (1.0 - e_ts) * self.l
            }
        }
    }

    // ∫_{t0}^{t1} e^{-z(t1-u)} z d(u) du, split at τ.
    fn drift(&self, z: f64, t0: f64, t1: f64) -> f64 {
        if !(t1 > t0) {
            return 0.0;
        }
        let mut total = 0.0;
        let short_end = t1.min(self.tau);
        if short_end > t0 {
            let e1 = exp(-z * (t1 - short_end));
            let e0 = exp(-z * (t1 - t0));
            total += match self.kind {
                PremiumKind::Linear => {
                    // ∫ u z e^{-z(t1-u)} du = [u e^{-z(t1-u)}] - (e1 - e0)/z
                    let moment = short_end * e1 - t0 * e0 - e1 * loading(z, short_end - t0);
                    self.d * ((e1 - e0) - self.m * moment)
                }
                _ => self.d * (e1 - e0),
            };
        }
        let long_start = t0.max(self.tau);
        if t1 > long_start {
            total -= self.l * crate::math::expm1(-z * (t1 - long_start));
        }
        total
    }

    // ∫_0^t d(u) du
    fn integral(&self, t: f64) -> f64 {
        let s = t.min(self.tau);
        let short = match self.kind {
            PremiumKind::Linear => self.d * (s - 0.5 * self.m * s * s),
            _ => self.d * s,
        };
        short + self.l * (t - s).max(0.0)
    }

    // RP(t) = cd·d + cl·l, linear in the levels for all kinds (for the linear
    // kind m·d = (d − l)/τ is substituted).
    fn rp_coefficients(kind: PremiumKind, z: f64, tau: f64, t: f64) -> (f64, f64) {
        match kind {
            PremiumKind::Constant => (-crate::math::expm1(-z * t), 0.0),
            PremiumKind::Step => {
                let s = t.min(tau);
                let e_ts = exp(-z * (t - s));
                (e_ts - exp(-z * t), 1.0 - e_ts)
            }
            PremiumKind::Linear => {
                let s = t.min(tau);
                let e_ts = exp(-z * (t - s));
                let e_t = exp(-z * t);
                // (e_ts − e_t)/z written without the division
                let decay = e_ts * loading(z, s);
                let ramp = (e_ts * s - decay) / tau;
                (e_ts - e_t - ramp, ramp + 1.0 - e_ts)
            }
        }
    }
}

/// Market price of risk `Φ(t)` at one time point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketPriceOfRisk {
    pub phi1: f64,
    pub phi2: f64,
}

/// ```text
/// Φ₁ = −a d_x/σ,   Φ₂ = −b d_y/(η√(1−ρ²)) + ρ a d_x/(σ√(1−ρ²))
/// ```
///
/// Singular as `|ρ| → 1`; the dynamics themselves never need `Φ`.
pub fn market_price_of_risk(p: &G2Params, spec: &PremiumSpec, t: f64) -> Result<MarketPriceOfRisk> {
    if !(p.sigma > 0.0 && p.eta > 0.0) {
        return Err(Error::InvalidParams(
            "market price of risk needs sigma > 0 and eta > 0".into(),
        ));
    }
    if p.rho.abs() >= RHO_SINGULAR {
        return Err(Error::SingularCorrelation { rho: p.rho });
    }
    let (dx, dy) = spec.d_value(t);
    let root = sqrt(1.0 - p.rho * p.rho);
    Ok(MarketPriceOfRisk {
        phi1: -p.a * dx / p.sigma,
        phi2: -p.b * dy / (p.eta * root) + p.rho * p.a * dx / (p.sigma * root),
    })
}

fn check_horizon(t: f64, maturity: f64) -> Result<()> {
    if t >= 0.0 && maturity > t {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "expected rate needs 0 <= t < T, got t={t}, T={maturity}"
        )))
    }
}

/// `E^ℚ[r(t,T)] = (∫_t^T φ − ½ V(t,T)) / (T − t)`.
pub fn expected_rate_q(curve: &DiscountCurve, p: &G2Params, t: f64, maturity: f64) -> Result<f64> {
    check_horizon(t, maturity)?;
    Ok((integrated_phi(curve, p, t, maturity)? - 0.5 * integrated_variance(p, t, maturity)) / (maturity - t))
}

/// `E^ℙ[r(t,T)]`: the ℚ expectation plus the loading-weighted premia.
pub fn expected_rate_p(
    curve: &DiscountCurve,
    p: &G2Params,
    spec: &PremiumSpec,
    t: f64,
    maturity: f64,
) -> Result<f64> {
    let q = expected_rate_q(curve, p, t, maturity)?;
    let tenor = maturity - t;
    Ok(q + loading(p.a, tenor) / tenor * spec.rp_x(p, t) + loading(p.b, tenor) / tenor * spec.rp_y(p, t))
}

/// Fits a premium spec of the given kind so that `expected_rate_p`
/// reproduces each forecast exactly.
///
/// The constant kind takes the two short forecasts only. Step and linear
/// take two short and two long forecasts with horizons
/// `t₁ ≤ t₂ ≤ τ < t₃ ≤ t₄`. Forecast indices in errors count the short
/// forecasts first, then the long ones.
pub fn calibrate_p(
    curve: &DiscountCurve,
    p: &G2Params,
    kind: PremiumKind,
    short: &[RateForecast],
    long: &[RateForecast],
    tau: f64,
) -> Result<PremiumSpec> {
    let forecasts: Vec<RateForecast> = short.iter().chain(long).copied().collect();
    let needed = kind.forecasts_needed();
    if forecasts.len() != needed || short.len() != 2 {
        return Err(Error::ForecastArity {
            kind: kind.name(),
            expected: needed,
            got: forecasts.len(),
        });
    }
    if kind != PremiumKind::Constant {
        check_tau(tau)?;
        let h: Vec<f64> = forecasts.iter().map(|f| f.horizon_years).collect();
        if !(h[0] <= h[1] && h[1] < h[2] && h[2] <= h[3]) {
            return Err(Error::ForecastOrdering(format!(
                "horizons must satisfy t1 <= t2 < t3 <= t4, got {}, {}, {}, {}",
                h[0], h[1], h[2], h[3]
            )));
        }
        if !(h[1] <= tau && tau < h[2]) {
            return Err(Error::ForecastOrdering(format!(
                "tau = {tau} must satisfy t2 <= tau < t3 (t2 = {}, t3 = {})",
                h[1], h[2]
            )));
        }
    }

    let n = needed;
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut rhs = Vec::with_capacity(n);
    for f in &forecasts {
        let (t, big_t) = (f.horizon_years, f.maturity_years);
        let tenor = big_t - t;
        let wx = loading(p.a, tenor) / tenor;
        let wy = loading(p.b, tenor) / tenor;
        let (dx, lx) = Leg::rp_coefficients(kind, p.a, tau, t);
        let (dy, ly) = Leg::rp_coefficients(kind, p.b, tau, t);
        let row = match kind {
            PremiumKind::Constant => alloc::vec![wx * dx, wy * dy],
            _ => alloc::vec![wx * dx, wy * dy, wx * lx, wy * ly],
        };
        rows.push(row);
        rhs.push(f.rate - expected_rate_q(curve, p, t, big_t)?);
    }
    let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
    let m = Matrix::from_rows(&refs);
    let cond = m.condition_number();
    let sol = if cond.is_finite() && cond <= MAX_CONDITION {
        m.solve(&rhs)
    } else {
        None
    };
    let Some(sol) = sol else {
        let (first, second) = most_parallel_rows(&rows);
        return Err(Error::SingularForecasts {
            condition: cond,
            first,
            second,
        });
    };
    match kind {
        PremiumKind::Constant => Ok(PremiumSpec::constant(sol[0], sol[1])),
        _ => PremiumSpec::from_levels(kind, sol[0], sol[1], sol[2], sol[3], tau),
    }
}

fn most_parallel_rows(rows: &[Vec<f64>]) -> (usize, usize) {
    let norm = |r: &[f64]| sqrt(r.iter().map(|v| v * v).sum());
    let mut best = (0, 1);
    let mut best_cos = -1.0;
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let (ni, nj) = (norm(&rows[i]), norm(&rows[j]));
            let cos = if ni == 0.0 || nj == 0.0 {
                1.0
            } else {
                rows[i].iter().zip(&rows[j]).map(|(u, v)| u * v).sum::<f64>().abs() / (ni * nj)
            };
            if cos > best_cos {
                best_cos = cos;
                best = (i, j);
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_params() -> G2Params {
        G2Params::new(0.2997, 0.0407, 0.0114, 0.0114, -0.9998).unwrap()
    }

    fn trapezoid_rp(spec: &PremiumSpec, p: &G2Params, t: f64, n: usize) -> (f64, f64) {
        let h = t / n as f64;
        let mut sx = 0.0;
        let mut sy = 0.0;
        for k in 0..=n {
            let u = k as f64 * h;
            let w = if k == 0 || k == n { 0.5 } else { 1.0 };
            let (dx, dy) = spec.d_value(u);
            sx += w * (-p.a * (t - u)).exp() * p.a * dx;
            sy += w * (-p.b * (t - u)).exp() * p.b * dy;
        }
        (sx * h, sy * h)
    }

    #[test]
    fn d_values() {
        let c = PremiumSpec::constant(-0.0112, 0.0779);
        assert_eq!(c.d_value(17.0), (-0.0112, 0.0779));
        let s = PremiumSpec::step(-0.0112, 0.0779, -0.0081, -0.0088, 2.0).unwrap();
        assert_eq!(s.d_value(3.0), (-0.0081, -0.0088));
        assert_eq!(s.d_value(2.0), (-0.0112, 0.0779));
        let l = PremiumSpec::linear(-0.0151, 0.05, -0.0081, -0.0088, 2.0).unwrap();
        let (m_x, _) = l.slopes().unwrap();
        assert!((m_x - 0.231_788).abs() < 1e-6);
        assert!((l.d_value(1.0).0 + 0.0116).abs() < 1e-15);
        // short branch at τ hits the long level
        assert!((l.d_value(2.0).0 - -0.0081).abs() < 1e-17);
    }

    #[test]
    fn degenerate_linear_slope() {
        let err = PremiumSpec::linear(1e-13, 0.01, 0.02, 0.0, 2.0).unwrap_err();
        assert!(matches!(err, Error::DegenerateSlope { which: "d_x", .. }));
        let zero = PremiumSpec::linear(0.0, 0.0, 0.0, 0.0, 2.0).unwrap();
        assert_eq!(zero.slopes(), Some((0.0, 0.0)));
    }

    #[test]
    fn market_price_examples() {
        let p = G2Params::new(1.0, 1.0, 1.0, 1.0, 0.0).unwrap();
        let m = market_price_of_risk(&p, &PremiumSpec::constant(0.3, 0.3), 1.0).unwrap();
        assert_eq!((m.phi1, m.phi2), (-0.3, -0.3));
        let m = market_price_of_risk(&reference_params(), &PremiumSpec::ZERO, 1.0).unwrap();
        assert_eq!((m.phi1, m.phi2), (0.0, 0.0));
        let m = market_price_of_risk(&reference_params(), &PremiumSpec::constant(-0.0112, 0.0779), 0.0).unwrap();
        assert!((m.phi1 - 0.294_44).abs() < 1e-5);
        let mut p = reference_params();
        p.rho = -1.0;
        assert!(matches!(
            market_price_of_risk(&p, &PremiumSpec::ZERO, 0.0),
            Err(Error::SingularCorrelation { .. })
        ));
    }

    #[test]
    fn rp_limits() {
        let p = reference_params();
        let c = PremiumSpec::constant(-0.0112, 0.0779);
        assert_eq!(c.rp_x(&p, 0.0), 0.0);
        assert!((c.rp_x(&p, 200.0) - -0.0112).abs() < 1e-12);
        let s = PremiumSpec::step(-0.0112, 0.0779, -0.0081, -0.0088, 2.0).unwrap();
        let l = PremiumSpec::linear(-0.0151, 0.05, -0.0081, -0.0088, 2.0).unwrap();
        let far = 50.0 / p.a.min(p.b);
        for spec in [s, l] {
            assert!((spec.rp_x(&p, far) - -0.0081).abs() < 1e-10);
            assert!((spec.rp_y(&p, far) - -0.0088).abs() < 1e-10);
        }
    }

    #[test]
    fn rp_matches_trapezoid() {
        let p = reference_params();
        let s = PremiumSpec::step(-0.0112, 0.0779, -0.0081, -0.0088, 2.0).unwrap();
        let hand = (-0.2997f64 * 8.0).exp() * (1.0 - (-0.2997f64 * 2.0).exp()) * -0.0112
            + (1.0 - (-0.2997f64 * 8.0).exp()) * -0.0081;
        assert!((s.rp_x(&p, 10.0) - hand).abs() < 1e-15);
        // keep τ on a node so the jump is resolved by the rule
        let (qx, _) = trapezoid_rp(&s, &p, 10.0, 100_000);
        assert!((s.rp_x(&p, 10.0) - qx).abs() < 1e-8);

        let l = PremiumSpec::linear(-0.0151, 0.05, -0.0081, -0.0088, 2.0).unwrap();
        for t in [0.7, 2.0, 5.5, 30.0] {
            let (qx, qy) = trapezoid_rp(&l, &p, t, 100_000);
            assert!((l.rp_x(&p, t) - qx).abs() < 1e-9, "t={t}");
            assert!((l.rp_y(&p, t) - qy).abs() < 1e-9, "t={t}");
        }
    }

    #[test]
    fn coefficients_reproduce_rp() {
        let p = reference_params();
        let specs = [
            PremiumSpec::constant(0.01, -0.02),
            PremiumSpec::step(0.01, -0.02, 0.005, 0.003, 1.5).unwrap(),
            PremiumSpec::linear(0.01, -0.02, 0.005, 0.003, 1.5).unwrap(),
        ];
        for spec in &specs {
            let leg = spec.leg_x();
            for t in [0.0, 0.3, 1.5, 4.0, 40.0] {
                let (cd, cl) = Leg::rp_coefficients(spec.kind(), p.a, leg.tau, t);
                let via = cd * leg.d + cl * leg.l;
                assert!((via - spec.rp_x(&p, t)).abs() < 1e-16, "{:?} t={t}", spec.kind());
            }
        }
    }

    #[test]
    fn drift_is_additive_and_matches_rp() {
        let p = reference_params();
        let l = PremiumSpec::linear(-0.0151, 0.05, -0.0081, -0.0088, 2.0).unwrap();
        let s = PremiumSpec::step(-0.0112, 0.0779, -0.0081, -0.0088, 2.0).unwrap();
        for spec in [l, s, PremiumSpec::constant(0.01, 0.02)] {
            // chain transitions of a deterministic OU mean
            let mut mx = 0.0;
            let mut t = 0.0;
            for h in [0.25, 1.0, 0.5, 0.75, 3.0] {
                mx = mx * (-p.a * h).exp() + spec.drift(&p, t, t + h).0;
                t += h;
            }
            assert!((mx - spec.rp_x(&p, t)).abs() < 1e-15);
        }
    }

    #[test]
    fn premium_integral_matches_rp_integral() {
        let p = reference_params();
        let l = PremiumSpec::linear(-0.0151, 0.05, -0.0081, -0.0088, 2.0).unwrap();
        let n = 20_000;
        let big_t = 10.0;
        let h = big_t / n as f64;
        let quad: f64 = (0..n).map(|k| l.rp_x(&p, (k as f64 + 0.5) * h) * h).sum();
        assert!((l.premium_integrals(&p, big_t).0 - quad).abs() < 1e-9);
    }

    #[test]
    fn expected_rate_examples() {
        let curve = DiscountCurve::from_zero_rates(&[(0.5, -0.004), (5.0, 0.0), (30.0, 0.004)]).unwrap();
        let p = reference_params();
        let q0 = expected_rate_q(&curve, &p, 0.0, 10.0).unwrap();
        assert!((q0 - curve.spot_rate(10.0).unwrap()).abs() < 1e-15);
        let det = G2Params::new(0.3, 0.04, 0.0, 0.0, 0.0).unwrap();
        let fwd = (curve.discount(2.0).unwrap() / curve.discount(12.0).unwrap()).ln() / 10.0;
        assert!((expected_rate_q(&curve, &det, 2.0, 12.0).unwrap() - fwd).abs() < 1e-15);
        assert_eq!(
            expected_rate_p(&curve, &p, &PremiumSpec::ZERO, 2.0, 12.0).unwrap(),
            expected_rate_q(&curve, &p, 2.0, 12.0).unwrap()
        );
        assert!(expected_rate_q(&curve, &p, 3.0, 3.0).is_err());
    }

    fn forecasts_from(curve: &DiscountCurve, p: &G2Params, spec: &PremiumSpec, pts: &[(f64, f64)]) -> Vec<RateForecast> {
        pts.iter()
            .map(|&(t, big_t)| RateForecast::new(t, big_t, expected_rate_p(curve, p, spec, t, big_t).unwrap()).unwrap())
            .collect()
    }

    #[test]
    fn calibration_round_trips() {
        let curve = DiscountCurve::flat(0.01, 60.0).unwrap();
        let p = reference_params();
        let pts = [(2.0, 2.25), (2.0, 12.0), (40.0, 40.25), (40.0, 50.0)];
        let truth = [
            PremiumSpec::constant(-0.0112, 0.0779),
            PremiumSpec::step(-0.0112, 0.0779, -0.0081, -0.0088, 2.0).unwrap(),
            PremiumSpec::linear(-0.0151, 0.05, -0.0081, -0.0088, 2.0).unwrap(),
        ];
        for spec in &truth {
            let f = forecasts_from(&curve, &p, spec, &pts);
            let long: &[RateForecast] = if spec.kind() == PremiumKind::Constant { &[] } else { &f[2..] };
            let got = calibrate_p(&curve, &p, spec.kind(), &f[..2], long, 2.0).unwrap();
            assert!((got.d_x() - spec.d_x()).abs() < 1e-9);
            assert!((got.d_y() - spec.d_y()).abs() < 1e-9);
            if let (Some(lx), Some(want)) = (got.l_x(), spec.l_x()) {
                assert!((lx - want).abs() < 1e-9);
                assert!((got.l_y().unwrap() - spec.l_y().unwrap()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn calibration_validation() {
        let curve = DiscountCurve::flat(0.01, 60.0).unwrap();
        let p = reference_params();
        let f = forecasts_from(&curve, &p, &PremiumSpec::ZERO, &[(2.0, 2.25), (2.0, 12.0), (40.0, 40.25), (40.0, 50.0)]);
        assert!(matches!(
            calibrate_p(&curve, &p, PremiumKind::Constant, &f[..2], &f[2..], 2.0),
            Err(Error::ForecastArity { expected: 2, got: 4, .. })
        ));
        assert!(matches!(
            calibrate_p(&curve, &p, PremiumKind::Step, &f[..2], &[], 2.0),
            Err(Error::ForecastArity { .. })
        ));
        assert!(matches!(
            calibrate_p(&curve, &p, PremiumKind::Step, &f[..2], &f[2..], 40.0),
            Err(Error::ForecastOrdering(_))
        ));
        // identical forecast rows
        let dup = [f[0], f[0]];
        assert!(matches!(
            calibrate_p(&curve, &p, PremiumKind::Constant, &dup, &[], 2.0),
            Err(Error::SingularForecasts { first: 0, second: 1, .. })
        ));
        let zero = calibrate_p(&curve, &p, PremiumKind::Linear, &f[..2], &f[2..], 2.0).unwrap();
        assert!(zero.d_x().abs() < 1e-12 && zero.l_y().unwrap().abs() < 1e-12);
    }
}
