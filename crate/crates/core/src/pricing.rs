//! European swaption prices.
//!
//! Market quotes are normal (Bachelier) volatilities, which stay meaningful
//! for negative rates. Model prices use the usual one-dimensional reduction
//! for G2++: under the `T`-forward measure the factors at expiry are jointly
//! Gaussian, the payoff conditional on `x` is integrated in closed form over
//! `y` (after solving for the critical `ȳ(x)`), and the remaining integral
//! over `x` is done by Gauss–Legendre quadrature with node doubling.

use alloc::format;
use alloc::vec::Vec;

use crate::curve::{DiscountCurve, QuoteKind, SwaptionQuote};
use crate::error::{Error, Result};
use crate::math::{exp, norm_cdf, norm_pdf, sqrt};
use crate::model::{integrated_variance, loading, G2Params};
use crate::quadrature::{integrate_adaptive, solve_bracketed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExerciseType {
    /// Right to pay fixed.
    Payer,
    /// Right to receive fixed.
    Receiver,
}

impl ExerciseType {
    fn sign(self) -> f64 {
        match self {
            ExerciseType::Payer => 1.0,
            ExerciseType::Receiver => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwaptionSpec {
    pub expiry_years: f64,
    pub payment_times: Vec<f64>,
    pub fixed_rate: f64,
    pub notional: f64,
    pub exercise: ExerciseType,
}

impl SwaptionSpec {
    pub fn new(
        expiry_years: f64,
        payment_times: Vec<f64>,
        fixed_rate: f64,
        notional: f64,
        exercise: ExerciseType,
    ) -> Result<Self> {
        let spec = Self {
            expiry_years,
            payment_times,
            fixed_rate,
            notional,
            exercise,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Swaption on a swap starting at `expiry` and running `tenor` years with
    /// `frequency` fixed payments a year. A non-integral number of periods
    /// gives a short first period.
    pub fn from_grid(
        expiry: f64,
        tenor: f64,
        frequency: u32,
        fixed_rate: f64,
        exercise: ExerciseType,
    ) -> Result<Self> {
        if frequency == 0 {
            return Err(Error::InvalidInput("fixed-leg frequency must be positive".into()));
        }
        if !(expiry > 0.0) || !(tenor > 0.0) {
            return Err(Error::InvalidInput(format!(
                "swaption expiry and tenor must be positive, got {expiry} x {tenor}"
            )));
        }
        let period = 1.0 / frequency as f64;
        let periods = tenor / period;
        let n = libm::round(periods);
        let n = if (periods - n).abs() < 1e-9 { n as usize } else { libm::ceil(periods) as usize };
        let end = expiry + tenor;
        let mut times: Vec<f64> = (0..n)
            .map(|k| end - (n - 1 - k) as f64 * period)
            .filter(|&t| t > expiry + 1e-9)
            .collect();
        if let Some(last) = times.last_mut() {
            *last = end;
        }
        if times.is_empty() {
            times.push(end);
        }
        Self::new(expiry, times, fixed_rate, 1.0, exercise)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.expiry_years > 0.0) {
            return Err(Error::InvalidInput(format!(
                "swaption expiry must be positive, got {}",
                self.expiry_years
            )));
        }
        if self.payment_times.is_empty() {
            return Err(Error::InvalidInput("swaption needs at least one payment".into()));
        }
        let mut prev = self.expiry_years;
        for &t in &self.payment_times {
            if !(t > prev) {
                return Err(Error::InvalidInput(format!(
                    "payment times must be increasing and after expiry, got {t} after {prev}"
                )));
            }
            prev = t;
        }
        if !(self.notional > 0.0) {
            return Err(Error::InvalidInput("notional must be positive".into()));
        }
        Ok(())
    }

    pub fn with_fixed_rate(mut self, fixed_rate: f64) -> Self {
        self.fixed_rate = fixed_rate;
        self
    }

    pub fn with_exercise(mut self, exercise: ExerciseType) -> Self {
        self.exercise = exercise;
        self
    }

    /// Accrual fractions of the fixed leg.
    pub fn accruals(&self) -> impl Iterator<Item = f64> + '_ {
        let mut prev = self.expiry_years;
        self.payment_times.iter().map(move |&t| {
            let tau = t - prev;
            prev = t;
            tau
        })
    }

    pub fn last_payment(&self) -> f64 {
        self.payment_times[self.payment_times.len() - 1]
    }
}

/// `Σ τ_i df(T_i)` over the fixed leg.
pub fn annuity(curve: &DiscountCurve, spec: &SwaptionSpec) -> Result<f64> {
    spec.payment_times
        .iter()
        .zip(spec.accruals())
        .try_fold(0.0, |acc, (&t, tau)| Ok(acc + tau * curve.discount(t)?))
}

/// Par rate of the forward-starting swap, `(df(T₀) − df(T_n)) / Σ τ_i df(T_i)`.
pub fn atm_forward_swap_rate(curve: &DiscountCurve, spec: &SwaptionSpec) -> Result<f64> {
    let ann = annuity(curve, spec)?;
    if !(ann > 0.0) {
        return Err(Error::Numeric("zero annuity".into()));
    }
    Ok((curve.discount(spec.expiry_years)? - curve.discount(spec.last_payment())?) / ann)
}

/// Bachelier price of a swaption with the given forward swap rate, strike,
/// normal volatility and annuity.
pub fn bachelier_price(
    forward: f64,
    strike: f64,
    normal_vol: f64,
    expiry: f64,
    annuity: f64,
    exercise: ExerciseType,
) -> f64 {
    let w = exercise.sign();
    let intrinsic = w * (forward - strike);
    let v = normal_vol * sqrt(expiry);
    if v <= 0.0 {
        return annuity * intrinsic.max(0.0);
    }
    let d = intrinsic / v;
    annuity * (intrinsic * norm_cdf(d) + v * norm_pdf(d))
}

/// Settings of the semi-analytic G2++ pricer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub start_nodes: usize,
    pub max_nodes: usize,
    pub rel_tol: f64,
    /// Half-width of the integration range in standard deviations of `x`.
    pub width: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            start_nodes: 64,
            max_nodes: 1 << 14,
            rel_tol: 1e-8,
            width: 8.0,
        }
    }
}

/// G2++ price of a European swaption with the default quadrature settings.
pub fn price_swaption_g2(curve: &DiscountCurve, p: &G2Params, spec: &SwaptionSpec) -> Result<f64> {
    price_swaption_g2_with(curve, p, spec, &QuadratureConfig::default())
}

pub fn price_swaption_g2_with(
    curve: &DiscountCurve,
    p: &G2Params,
    spec: &SwaptionSpec,
    quad: &QuadratureConfig,
) -> Result<f64> {
    spec.validate()?;
    let setup = ForwardMeasureSetup::new(curve, p, spec)?;
    Ok(spec.notional * setup.df_expiry * setup.integrate(quad)?)
}

/// Coupon legs and the Gaussian law of `(x(T₀), y(T₀))` under the
/// `T₀`-forward measure.
struct ForwardMeasureSetup {
    df_expiry: f64,
    // c_i A(T₀, T_i)
    weights: Vec<f64>,
    loading_x: Vec<f64>,
    loading_y: Vec<f64>,
    mu_x: f64,
    mu_y: f64,
    sd_x: f64,
    sd_y: f64,
    corr: f64,
    sign: f64,
}

impl ForwardMeasureSetup {
    fn new(curve: &DiscountCurve, p: &G2Params, spec: &SwaptionSpec) -> Result<Self> {
        let t0 = spec.expiry_years;
        let df_expiry = curve.discount(t0)?;
        let v0 = integrated_variance(p, 0.0, t0);
        let n = spec.payment_times.len();
        let mut weights = Vec::with_capacity(n);
        let mut loading_x = Vec::with_capacity(n);
        let mut loading_y = Vec::with_capacity(n);
        for (i, (&ti, tau)) in spec.payment_times.iter().zip(spec.accruals()).enumerate() {
            let mut c = spec.fixed_rate * tau;
            if i == n - 1 {
                c += 1.0;
            }
            let vi = integrated_variance(p, t0, ti) - integrated_variance(p, 0.0, ti) + v0;
            let a_i = curve.discount(ti)? / df_expiry * exp(0.5 * vi);
            weights.push(c * a_i);
            loading_x.push(loading(p.a, ti - t0));
            loading_y.push(loading(p.b, ti - t0));
        }

        let (a, b, s, e, r) = (p.a, p.b, p.sigma, p.eta, p.rho);
        let (la, lb, l2a, l2b, lab) = (
            loading(a, t0),
            loading(b, t0),
            loading(2.0 * a, t0),
            loading(2.0 * b, t0),
            loading(a + b, t0),
        );
        let mu_x = -(s * s / a + r * s * e / b) * la + s * s / a * l2a + r * s * e / b * lab;
        let mu_y = -(e * e / b + r * s * e / a) * lb + e * e / b * l2b + r * s * e / a * lab;
        let sd_x = s * sqrt(l2a);
        let sd_y = e * sqrt(l2b);
        let corr = if sd_x > 0.0 && sd_y > 0.0 {
            (r * s * e * lab / (sd_x * sd_y)).clamp(-1.0, 1.0)
        } else {
            0.0
        };
        Ok(Self {
            df_expiry,
            weights,
            loading_x,
            loading_y,
            mu_x,
            mu_y,
            sd_x,
            sd_y,
            corr,
            sign: spec.exercise.sign(),
        })
    }

    // Σ q_i e^{-B_b,i y} with q_i = c_i A_i e^{-B_a,i x}, and its y-derivative.
    fn coupon_sum(q: &[f64], bb: &[f64], y: f64) -> (f64, f64) {
        let mut f = 0.0;
        let mut df = 0.0;
        for (&qi, &bi) in q.iter().zip(bb) {
            let term = qi * exp(-bi * y);
            f += term;
            df -= bi * term;
        }
        (f, df)
    }

    fn conditional_mean_y(&self, x: f64) -> f64 {
        if self.sd_x > 0.0 {
            self.mu_y + self.corr * self.sd_y * (x - self.mu_x) / self.sd_x
        } else {
            self.mu_y
        }
    }

    fn conditional_sd_y(&self) -> f64 {
        self.sd_y * sqrt((1.0 - self.corr * self.corr).max(0.0))
    }

    fn weights_at(&self, x: f64, out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            self.weights
                .iter()
                .zip(&self.loading_x)
                .map(|(&w, &ba)| w * exp(-ba * x)),
        );
    }

    /// `E[(ω(1 − Σ c_i P(T₀,T_i)))⁺ | x]` under the forward measure.
    ///
    /// `scratch` holds the coupon weights; `guess` carries ȳ between calls,
    /// which is smooth in `x`.
    fn conditional_payoff(&self, x: f64, scratch: &mut Vec<f64>, guess: &mut Option<f64>) -> Result<f64> {
        self.weights_at(x, scratch);
        let q = &scratch[..];
        let m = self.conditional_mean_y(x);
        let s = self.conditional_sd_y();
        if !(s > 0.0) {
            let (f, _) = Self::coupon_sum(q, &self.loading_y, m);
            return Ok((self.sign * (1.0 - f)).max(0.0));
        }
        let y_bar = match self.critical_y_newton(q, guess.unwrap_or(m)) {
            Some(y) => y,
            None => self.critical_y(q, m, s)?,
        };
        *guess = Some(y_bar);
        let mut value = 0.0;
        let ys = (m - y_bar) / s;
        for (&qi, &bi) in q.iter().zip(&self.loading_y) {
            let mgf = qi * exp(-bi * m + 0.5 * bi * bi * s * s);
            value += mgf * norm_cdf(self.sign * (ys - bi * s));
        }
        Ok(self.sign * (norm_cdf(self.sign * ys) - value))
    }

    // Newton on ln Σ q_i e^{-B_b,i y}, which is convex and decreasing when
    // all weights are positive, so the iteration cannot cycle.
    fn critical_y_newton(&self, q: &[f64], start: f64) -> Option<f64> {
        let mut y = start;
        for _ in 0..50 {
            let (f, df) = Self::coupon_sum(q, &self.loading_y, y);
            if !(f > 0.0 && f.is_finite() && df < 0.0) {
                return None;
            }
            let step = crate::math::ln(f) * f / df;
            y -= step;
            if step.abs() <= 1e-14 * (1.0 + y.abs()) {
                return Some(y);
            }
        }
        None
    }

    // ȳ with Σ q_i e^{-B_b,i ȳ} = 1 by bracketing; the sum decreases in y.
    fn critical_y(&self, q: &[f64], m: f64, s: f64) -> Result<f64> {
        let bb = &self.loading_y;
        let g = |y: f64| {
            let (f, df) = Self::coupon_sum(q, bb, y);
            (f - 1.0, df)
        };
        let mut step = s.max(1e-4);
        let (mut lo, mut hi) = (m - step, m + step);
        for _ in 0..64 {
            let glo = g(lo).0;
            let ghi = g(hi).0;
            if glo > 0.0 && ghi < 0.0 {
                return solve_bracketed(lo, hi, 1e-15, g);
            }
            step *= 2.0;
            if !(glo > 0.0) {
                lo = m - step;
            }
            if !(ghi < 0.0) {
                hi = m + step;
            }
        }
        Err(Error::Numeric(format!(
            "no critical second-factor value found around {m}"
        )))
    }

    fn integrate(&self, quad: &QuadratureConfig) -> Result<f64> {
        let mut scratch = Vec::with_capacity(self.weights.len());
        let mut guess = None;
        if !(self.sd_x > 0.0) {
            return self.conditional_payoff(self.mu_x, &mut scratch, &mut guess);
        }
        let mut integrand = |z: f64| -> Result<f64> {
            Ok(norm_pdf(z) * self.conditional_payoff(self.mu_x + self.sd_x * z, &mut scratch, &mut guess)?)
        };
        let breaks = self.kinks(quad.width);
        let mut total = 0.0;
        for w in breaks.windows(2) {
            let piece = integrate_adaptive(
                w[0],
                w[1],
                quad.start_nodes,
                quad.max_nodes,
                quad.rel_tol,
                1e-14,
                &mut integrand,
            )?;
            total += piece.value;
        }
        Ok(total)
    }

    // Break points in standardised x: the range ends, plus exercise-boundary
    // crossings when y is (nearly) a deterministic function of x.
    fn kinks(&self, width: f64) -> Vec<f64> {
        let mut breaks = alloc::vec![-width];
        if self.conditional_sd_y() < 1e-3 * self.sd_y.max(f64::MIN_POSITIVE) || self.sd_y == 0.0 {
            let boundary = |z: f64| {
                let x = self.mu_x + self.sd_x * z;
                let mut q = Vec::new();
                self.weights_at(x, &mut q);
                Self::coupon_sum(&q, &self.loading_y, self.conditional_mean_y(x)).0 - 1.0
            };
            const SCAN: usize = 2048;
            let h = 2.0 * width / SCAN as f64;
            let mut z0 = -width;
            let mut g0 = boundary(z0);
            for k in 1..=SCAN {
                let z1 = -width + k as f64 * h;
                let g1 = boundary(z1);
                if g0.signum() != g1.signum() && g0 != 0.0 {
                    let (mut lo, mut hi, mut glo) = (z0, z1, g0);
                    for _ in 0..80 {
                        let mid = 0.5 * (lo + hi);
                        let gm = boundary(mid);
                        if gm.signum() == glo.signum() {
                            lo = mid;
                            glo = gm;
                        } else {
                            hi = mid;
                        }
                    }
                    breaks.push(0.5 * (lo + hi));
                }
                z0 = z1;
                g0 = g1;
            }
        }
        breaks.push(width);
        breaks
    }
}

/// Swaption instrument behind a quote: ATM payer unless the quote carries a
/// strike.
pub fn quote_spec(curve: &DiscountCurve, quote: &SwaptionQuote, frequency: u32) -> Result<SwaptionSpec> {
    let spec = SwaptionSpec::from_grid(
        quote.expiry_years,
        quote.tenor_years,
        frequency,
        0.0,
        ExerciseType::Payer,
    )?;
    let strike = match quote.strike {
        Some(k) => k,
        None => atm_forward_swap_rate(curve, &spec)?,
    };
    Ok(spec.with_fixed_rate(strike))
}

/// Market price per unit notional implied by a quote.
pub fn market_price(curve: &DiscountCurve, quote: &SwaptionQuote, frequency: u32) -> Result<f64> {
    match quote.quote_kind {
        QuoteKind::Price => Ok(quote.quote),
        QuoteKind::NormalVol => {
            let spec = quote_spec(curve, quote, frequency)?;
            let fwd = atm_forward_swap_rate(curve, &spec)?;
            let ann = annuity(curve, &spec)?;
            Ok(bachelier_price(
                fwd,
                spec.fixed_rate,
                quote.quote,
                spec.expiry_years,
                ann,
                spec.exercise,
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::GaussLegendre;

    fn reference_params() -> G2Params {
        G2Params::new(0.2997, 0.0407, 0.0114, 0.0114, -0.9998).unwrap()
    }

    #[test]
    fn grid_schedule() {
        let s = SwaptionSpec::from_grid(5.0, 5.0, 1, 0.01, ExerciseType::Payer).unwrap();
        assert_eq!(s.payment_times, [6.0, 7.0, 8.0, 9.0, 10.0]);
        let s = SwaptionSpec::from_grid(1.0, 1.5, 1, 0.01, ExerciseType::Payer).unwrap();
        assert_eq!(s.payment_times, [1.5, 2.5]);
        assert!(s.accruals().zip([0.5, 1.0]).all(|(a, b)| (a - b).abs() < 1e-15));
    }

    #[test]
    fn forward_swap_rate_examples() {
        let c = DiscountCurve::new(&[(1.0, 0.99), (2.0, 0.97)]).unwrap();
        let s = SwaptionSpec::new(1.0, alloc::vec![2.0], 0.0, 1.0, ExerciseType::Payer).unwrap();
        let f = atm_forward_swap_rate(&c, &s).unwrap();
        assert!((f - 0.02 / 0.97).abs() < 1e-15);
        assert!((f - 0.020_619).abs() < 1e-6);

        let flat = DiscountCurve::new(&[(10.0, 1.0)]).unwrap();
        let s = SwaptionSpec::from_grid(2.0, 3.0, 1, 0.0, ExerciseType::Payer).unwrap();
        assert_eq!(atm_forward_swap_rate(&flat, &s).unwrap(), 0.0);

        // two annual payments on a flat 1% curve: (e^{-r} - e^{-3r}) / (e^{-2r} + e^{-3r})
        let c = DiscountCurve::flat(0.01, 10.0).unwrap();
        let s = SwaptionSpec::from_grid(1.0, 2.0, 1, 0.0, ExerciseType::Payer).unwrap();
        let r: f64 = 0.01;
        let hand = ((-r).exp() - (-3.0 * r).exp()) / ((-2.0 * r).exp() + (-3.0 * r).exp());
        let f = atm_forward_swap_rate(&c, &s).unwrap();
        assert!((f - hand).abs() < 1e-15);
        assert!((f - r).abs() < 1e-4);
    }

    #[test]
    fn bachelier_closed_forms() {
        assert_eq!(bachelier_price(0.01, 0.01, 0.0, 1.0, 4.0, ExerciseType::Payer), 0.0);
        let v = 0.007 * 2f64.sqrt();
        let atm = bachelier_price(0.02, 0.02, 0.007, 2.0, 3.0, ExerciseType::Receiver);
        assert!((atm - 3.0 * v / (2.0 * core::f64::consts::PI).sqrt()).abs() < 1e-16);
    }

    #[test]
    fn bachelier_matches_payoff_quadrature() {
        let (f, k, vol, t, ann): (f64, f64, f64, f64, f64) = (0.03, 0.02, 0.005, 1.0, 4.0);
        let sd = vol * t.sqrt();
        let rule = GaussLegendre::new(512);
        // payoff is zero below z* = (k - f) / sd
        let z_star = (k - f) / sd;
        let quad = rule.integrate(z_star, 12.0, |z| {
            (f + sd * z - k) * (-0.5 * z * z).exp() / (2.0 * core::f64::consts::PI).sqrt()
        });
        let closed = bachelier_price(f, k, vol, t, ann, ExerciseType::Payer);
        assert!((closed - ann * quad).abs() < 1e-10);
    }

    #[test]
    fn bachelier_parity() {
        for &(f, k) in &[(0.01, 0.02), (-0.004, 0.001), (0.03, 0.03)] {
            let pay = bachelier_price(f, k, 0.006, 3.0, 2.5, ExerciseType::Payer);
            let rec = bachelier_price(f, k, 0.006, 3.0, 2.5, ExerciseType::Receiver);
            assert!((pay - rec - 2.5 * (f - k)).abs() < 1e-12);
        }
    }

    #[test]
    fn deterministic_model_gives_intrinsic_value() {
        let c = DiscountCurve::from_zero_rates(&[(1.0, 0.005), (5.0, 0.01), (20.0, 0.015)]).unwrap();
        let p = G2Params::new(0.3, 0.05, 0.0, 0.0, -0.5).unwrap();
        for ex in [ExerciseType::Payer, ExerciseType::Receiver] {
            let s = SwaptionSpec::from_grid(5.0, 5.0, 1, 0.012, ex).unwrap();
            let fwd = atm_forward_swap_rate(&c, &s).unwrap();
            let ann = annuity(&c, &s).unwrap();
            let intrinsic = (ex.sign() * (fwd - 0.012) * ann).max(0.0);
            let g2 = price_swaption_g2(&c, &p, &s).unwrap();
            assert!((g2 - intrinsic).abs() < 1e-15, "{g2} vs {intrinsic}");
        }
    }

    #[test]
    fn deep_in_the_money_receiver() {
        let c = DiscountCurve::flat(0.01, 30.0).unwrap();
        let s = SwaptionSpec::from_grid(5.0, 5.0, 1, 1.0, ExerciseType::Receiver).unwrap();
        let g2 = price_swaption_g2(&c, &reference_params(), &s).unwrap();
        let ann = annuity(&c, &s).unwrap();
        let fixed_minus_float = 1.0 * ann - (c.discount(5.0).unwrap() - c.discount(10.0).unwrap());
        assert!((g2 - fixed_minus_float).abs() < 1e-10);
    }

    #[test]
    fn g2_parity_and_refinement() {
        let c = DiscountCurve::flat(0.01, 40.0).unwrap();
        let p = reference_params();
        for &(e, t, k) in &[(5.0, 5.0, 0.008), (10.0, 20.0, 0.012), (2.0, 7.0, 0.0)] {
            let pay = SwaptionSpec::from_grid(e, t, 1, k, ExerciseType::Payer).unwrap();
            let rec = pay.clone().with_exercise(ExerciseType::Receiver);
            let fwd = atm_forward_swap_rate(&c, &pay).unwrap();
            let ann = annuity(&c, &pay).unwrap();
            let vp = price_swaption_g2(&c, &p, &pay).unwrap();
            let vr = price_swaption_g2(&c, &p, &rec).unwrap();
            assert!((vp - vr - ann * (fwd - k)).abs() < 1e-10, "{e}x{t}");

            let fine = QuadratureConfig {
                start_nodes: 512,
                ..QuadratureConfig::default()
            };
            let vf = price_swaption_g2_with(&c, &p, &pay, &fine).unwrap();
            assert!((vf - vp).abs() < 1e-8 * vp);
        }
    }

    #[test]
    fn g2_price_increases_with_volatility() {
        // with ρ < 0 the vols partly offset each other, so only ρ ≥ 0 is monotone
        let c = DiscountCurve::flat(0.01, 40.0).unwrap();
        let s = SwaptionSpec::from_grid(5.0, 10.0, 1, 0.01, ExerciseType::Payer).unwrap();
        for rho in [0.0, 0.5] {
            let mut prev = (0.0, 0.0);
            for k in 0..6 {
                let v = 0.002 + 0.004 * k as f64;
                let ps = G2Params::new(0.3, 0.04, v, 0.01, rho).unwrap();
                let pe = G2Params::new(0.3, 0.04, 0.01, v, rho).unwrap();
                let cur = (
                    price_swaption_g2(&c, &ps, &s).unwrap(),
                    price_swaption_g2(&c, &pe, &s).unwrap(),
                );
                assert!(cur.0 >= prev.0 && cur.1 >= prev.1, "rho={rho} k={k}");
                prev = cur;
            }
        }
    }

    #[test]
    fn perfectly_correlated_factors_are_priced() {
        let c = DiscountCurve::flat(0.01, 40.0).unwrap();
        let p = G2Params::new(0.2, 0.2, 0.01, 0.008, -1.0).unwrap();
        let s = SwaptionSpec::from_grid(5.0, 5.0, 1, 0.01, ExerciseType::Payer).unwrap();
        let v = price_swaption_g2(&c, &p, &s).unwrap();
        assert!(v > 0.0 && v.is_finite());
        let rec = s.clone().with_exercise(ExerciseType::Receiver);
        let vr = price_swaption_g2(&c, &p, &rec).unwrap();
        let fwd = atm_forward_swap_rate(&c, &s).unwrap();
        let ann = annuity(&c, &s).unwrap();
        assert!((v - vr - ann * (fwd - 0.01)).abs() < 1e-9);
    }
}
