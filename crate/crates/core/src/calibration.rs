//! Risk-neutral calibration of `(a, b, σ, η, ρ)` to a swaption grid.
//!
//! The objective is the root-mean-square relative price error. The simplex
//! runs on `(ln a, ln b, ln σ, ln η, atanh ρ)` so that every vertex maps to
//! admissible parameters.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use crate::curve::{DiscountCurve, SwaptionQuote};
use crate::error::{Error, Result};
use crate::math::{atanh, exp, ln, sqrt, tanh};
use crate::model::G2Params;
use crate::pricing::{market_price, price_swaption_g2, quote_spec, SwaptionSpec};
use crate::simplex::{minimize, NelderMeadOptions};

/// Market prices below this are compared in absolute terms.
pub const TINY_PRICE: f64 = 1e-12;
/// Correlation clamp before `atanh`.
const RHO_CLAMP: f64 = 1.0 - 1e-12;
/// Five free parameters.
const MIN_QUOTES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexConfig {
    pub start: G2Params,
    /// Iteration budget shared by the first run and all restarts.
    pub max_iter: usize,
    pub tol_x: f64,
    pub tol_f: f64,
    pub restarts: usize,
    /// Relative displacement of the initial simplex vertices.
    pub initial_step: f64,
    /// Fixed-leg payments per year.
    pub frequency: u32,
}

impl Default for SimplexConfig {
    fn default() -> Self {
        Self {
            start: G2Params {
                a: 0.1,
                b: 0.05,
                sigma: 0.01,
                eta: 0.01,
                rho: -0.5,
            },
            max_iter: 5000,
            tol_x: 1e-8,
            tol_f: 1e-10,
            restarts: 5,
            initial_step: 0.1,
            frequency: 1,
        }
    }
}

impl SimplexConfig {
    pub fn validate(&self) -> Result<()> {
        let s = &self.start;
        if s.validate().is_err() || !(s.sigma > 0.0 && s.eta > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "start point must have a, b, sigma, eta > 0 and |rho| <= 1, got {s:?}"
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("simplex.max_iter must be positive".into()));
        }
        if !(self.tol_x > 0.0) || !(self.tol_f > 0.0) {
            return Err(Error::InvalidConfig("simplex tolerances must be positive".into()));
        }
        if !(self.initial_step > 0.0 && self.initial_step < 1.0) {
            return Err(Error::InvalidConfig("simplex step must lie in (0, 1)".into()));
        }
        if self.frequency == 0 {
            return Err(Error::InvalidConfig("fixed-leg frequency must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CalibrationWarning {
    /// Fewer quotes than free parameters.
    Underdetermined { quotes: usize },
}

impl core::fmt::Display for CalibrationWarning {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            CalibrationWarning::Underdetermined { quotes } => write!(
                f,
                "only {quotes} quotes for 5 parameters; the calibration is under-determined"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationQResult {
    pub params: G2Params,
    /// RMS relative price error at `params`.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub restarts_used: usize,
    pub warnings: Vec<CalibrationWarning>,
}

/// Instruments and market prices, computed once per calibration.
#[derive(Debug, Clone)]
pub struct CalibrationProblem<'a> {
    curve: &'a DiscountCurve,
    quotes: &'a [SwaptionQuote],
    specs: Vec<SwaptionSpec>,
    market: Vec<f64>,
}

impl<'a> CalibrationProblem<'a> {
    pub fn new(curve: &'a DiscountCurve, quotes: &'a [SwaptionQuote], frequency: u32) -> Result<Self> {
        if quotes.is_empty() {
            return Err(Error::InvalidInput("no swaption quotes".into()));
        }
        let mut specs = Vec::with_capacity(quotes.len());
        let mut market = Vec::with_capacity(quotes.len());
        for (i, q) in quotes.iter().enumerate() {
            let wrap = |e| quote_error(i, q, e);
            q.validate().map_err(wrap)?;
            specs.push(quote_spec(curve, q, frequency).map_err(wrap)?);
            market.push(market_price(curve, q, frequency).map_err(wrap)?);
        }
        Ok(Self {
            curve,
            quotes,
            specs,
            market,
        })
    }

    pub fn market_prices(&self) -> &[f64] {
        &self.market
    }

    pub fn instruments(&self) -> &[SwaptionSpec] {
        &self.specs
    }

    pub fn model_prices(&self, p: &G2Params) -> Result<Vec<f64>> {
        self.specs
            .iter()
            .enumerate()
            .map(|(i, s)| price_swaption_g2(self.curve, p, s).map_err(|e| quote_error(i, &self.quotes[i], e)))
            .collect()
    }

    /// RMS of `(model − market)/market` (absolute error for tiny market
    /// prices), summed in quote order.
    pub fn objective(&self, p: &G2Params) -> Result<f64> {
        let model = self.model_prices(p)?;
        let sum: f64 = model
            .iter()
            .zip(&self.market)
            .map(|(&m, &mk)| {
                let e = if mk.abs() < TINY_PRICE { m - mk } else { (m - mk) / mk };
                e * e
            })
            .sum();
        Ok(sqrt(sum / model.len() as f64))
    }
}

fn quote_error(index: usize, q: &SwaptionQuote, e: Error) -> Error {
    Error::Quote {
        index,
        expiry: q.expiry_years,
        tenor: q.tenor_years,
        source: Box::new(e),
    }
}

/// Calibration objective with annual fixed legs.
pub fn objective(curve: &DiscountCurve, quotes: &[SwaptionQuote], candidate: &G2Params) -> Result<f64> {
    candidate.validate()?;
    CalibrationProblem::new(curve, quotes, 1)?.objective(candidate)
}

fn to_unconstrained(p: &G2Params) -> [f64; 5] {
    [
        ln(p.a),
        ln(p.b),
        ln(p.sigma),
        ln(p.eta),
        atanh(p.rho.clamp(-RHO_CLAMP, RHO_CLAMP)),
    ]
}

fn from_unconstrained(u: &[f64]) -> G2Params {
    G2Params {
        a: exp(u[0]),
        b: exp(u[1]),
        sigma: exp(u[2]),
        eta: exp(u[3]),
        rho: tanh(u[4]).clamp(-1.0, 1.0),
    }
}

// Start vertex plus one vertex per parameter, each displaced by `step`
// relative to its value; ρ moves towards zero if scaling it up would leave
// (−0.99, 0.99).
fn simplex_around(p: &G2Params, step: f64) -> Vec<Vec<f64>> {
    let base = to_unconstrained(p);
    let mut verts = alloc::vec![base.to_vec()];
    for i in 0..4 {
        let mut v = base.to_vec();
        v[i] += ln(1.0 + step);
        verts.push(v);
    }
    let rho = p.rho;
    let moved = if rho == 0.0 {
        step
    } else if (rho * (1.0 + step)).abs() <= 0.99 {
        rho * (1.0 + step)
    } else {
        rho * (1.0 - step)
    };
    let mut v = base.to_vec();
    v[4] = atanh(moved.clamp(-RHO_CLAMP, RHO_CLAMP));
    verts.push(v);
    verts
}

/// Downhill-simplex calibration with restarts from the best vertex.
///
/// Running out of iterations is reported through `converged = false`.
pub fn calibrate_q(curve: &DiscountCurve, quotes: &[SwaptionQuote], config: &SimplexConfig) -> Result<CalibrationQResult> {
    config.validate()?;
    let problem = CalibrationProblem::new(curve, quotes, config.frequency)?;
    let mut warnings = Vec::new();
    if quotes.len() < MIN_QUOTES {
        warnings.push(CalibrationWarning::Underdetermined { quotes: quotes.len() });
    }

    let start = config.start;
    let f_start = problem.objective(&start)?;
    if f_start == 0.0 {
        return Ok(CalibrationQResult {
            params: start.canonical(),
            objective: 0.0,
            iterations: 0,
            converged: true,
            restarts_used: 0,
            warnings,
        });
    }

    let f = |u: &[f64]| -> Result<f64> {
        let p = from_unconstrained(u);
        if p.validate().is_err() {
            return Ok(f64::INFINITY);
        }
        // failing corners of parameter space are simply unattractive
        Ok(problem.objective(&p).unwrap_or(f64::INFINITY))
    };

    let mut best = start;
    let mut f_best = f_start;
    let mut iterations = 0;
    let mut restarts_used = 0;
    let mut converged;
    loop {
        let opts = NelderMeadOptions {
            max_iter: config.max_iter - iterations,
            tol_x: config.tol_x,
            tol_f: config.tol_f,
            initial_step: config.initial_step,
        };
        let run = minimize(f, simplex_around(&best, config.initial_step), &opts)?;
        iterations += run.iterations;
        converged = run.converged;
        let improvement = f_best - run.f;
        if run.f < f_best {
            best = from_unconstrained(&run.x);
            f_best = run.f;
        }
        if !converged || iterations >= config.max_iter {
            break;
        }
        if restarts_used >= config.restarts || (restarts_used > 0 && improvement <= config.tol_f) {
            break;
        }
        restarts_used += 1;
    }

    Ok(CalibrationQResult {
        params: best.canonical(),
        objective: f_best,
        iterations,
        converged,
        restarts_used,
        warnings,
    })
}
