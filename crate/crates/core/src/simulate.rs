//! Exact-transition Monte Carlo for the two factors under ℚ or ℙ, and the
//! bond-price and moment checks built on it.
//!
//! Path `i` draws its normals from a ChaCha8 stream keyed by the seed and
//! the path index, so any path can be regenerated on its own and does not
//! depend on how many paths are simulated. With antithetic sampling paths
//! `2k` and `2k + 1` share stream `k` with opposite signs.

use alloc::format;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::curve::DiscountCurve;
use crate::error::{Error, Result};
use crate::math::{exp, sqrt};
use crate::measure::PremiumSpec;
use crate::model::{integrated_phi, integrated_variance, loading, phi, FactorState, G2Params};
use crate::stats::RunningStats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Measure {
    /// Risk-neutral.
    Q,
    /// Real-world.
    P,
}

impl Measure {
    pub fn name(self) -> &'static str {
        match self {
            Measure::Q => "Q",
            Measure::P => "P",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub n_paths: usize,
    pub step_years: f64,
    pub horizon_years: f64,
    pub measure: Measure,
    pub seed: u64,
    pub antithetic: bool,
}

impl SimConfig {
    /// Monthly grid, no antithetics.
    pub fn monthly(n_paths: usize, horizon_years: f64, measure: Measure, seed: u64) -> Self {
        Self {
            n_paths,
            step_years: 1.0 / 12.0,
            horizon_years,
            measure,
            seed,
            antithetic: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::InvalidConfig("n_paths must be positive".into()));
        }
        if self.antithetic && self.n_paths < 2 {
            return Err(Error::InvalidConfig("antithetic sampling needs at least 2 paths".into()));
        }
        if !(self.step_years > 0.0) || !(self.horizon_years > 0.0) {
            return Err(Error::InvalidConfig("step and horizon must be positive".into()));
        }
        let ratio = self.horizon_years / self.step_years;
        if (ratio - libm::round(ratio)).abs() * self.step_years > 1e-9 || libm::round(ratio) < 1.0 {
            return Err(Error::InvalidConfig(format!(
                "horizon {} is not a multiple of the step {}",
                self.horizon_years, self.step_years
            )));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        libm::round(self.horizon_years / self.step_years) as usize
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps()).map(|k| k as f64 * self.step_years).collect()
    }

    /// Index of `t` on the grid, if it is a grid point (within 1e−9).
    pub fn grid_index(&self, t: f64) -> Option<usize> {
        let k = libm::round(t / self.step_years);
        ((k * self.step_years - t).abs() <= 1e-9 && k >= 0.0 && k as usize <= self.n_steps()).then_some(k as usize)
    }
}

/// Variances and covariance of the Gaussian part of one exact step, and
/// a lower-triangular square root of that covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Transition {
    decay_x: f64,
    decay_y: f64,
    l11: f64,
    l21: f64,
    l22: f64,
}

impl Transition {
    fn new(p: &G2Params, dt: f64) -> Self {
        let var_x = p.sigma * p.sigma * loading(2.0 * p.a, dt);
        let var_y = p.eta * p.eta * loading(2.0 * p.b, dt);
        let cov = p.rho * p.sigma * p.eta * loading(p.a + p.b, dt);
        let l11 = sqrt(var_x);
        let l21 = if l11 > 0.0 { cov / l11 } else { 0.0 };
        // rank one at |ρ| = 1 (up to rounding of the two variances)
        let rest = var_y - l21 * l21;
        let l22 = if rest <= 1e-12 * var_y { 0.0 } else { sqrt(rest) };
        Self {
            decay_x: exp(-p.a * dt),
            decay_y: exp(-p.b * dt),
            l11,
            l21,
            l22,
        }
    }

    #[inline]
    fn apply(&self, x: f64, y: f64, drift: (f64, f64), z: (f64, f64)) -> (f64, f64) {
        (
            x * self.decay_x + drift.0 + self.l11 * z.0,
            y * self.decay_y + drift.1 + self.l21 * z.0 + self.l22 * z.1,
        )
    }
}

/// One exact transition of `(x, y)` over `dt` given a pair of independent
/// standard normals. Without a premium spec the ℚ dynamics apply.
pub fn step_exact(
    p: &G2Params,
    spec: Option<&PremiumSpec>,
    state: FactorState,
    dt: f64,
    gaussian_pair: (f64, f64),
) -> FactorState {
    let drift = spec.map_or((0.0, 0.0), |s| s.drift(p, state.t, state.t + dt));
    let (x, y) = Transition::new(p, dt).apply(state.x, state.y, drift, gaussian_pair);
    FactorState::new(state.t + dt, x, y)
}

/// Deterministic path generator: all per-step constants plus the seed.
#[derive(Debug, Clone)]
pub struct PathGenerator {
    config: SimConfig,
    times: Vec<f64>,
    transition: Transition,
    drifts: Vec<(f64, f64)>,
}

impl PathGenerator {
    pub fn new(p: &G2Params, spec: Option<&PremiumSpec>, config: &SimConfig) -> Result<Self> {
        config.validate()?;
        p.validate()?;
        let spec = match (config.measure, spec) {
            (Measure::Q, _) => None,
            (Measure::P, Some(s)) => Some(s),
            (Measure::P, None) => {
                return Err(Error::InvalidConfig("real-world simulation needs a premium spec".into()))
            }
        };
        let times = config.times();
        let drifts = times
            .windows(2)
            .map(|w| spec.map_or((0.0, 0.0), |s| s.drift(p, w[0], w[1])))
            .collect();
        Ok(Self {
            config: *config,
            times,
            transition: Transition::new(p, config.step_years),
            drifts,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Writes path `i` into `x` and `y` (each of length `times().len()`).
    pub fn fill_path(&self, i: usize, x: &mut [f64], y: &mut [f64]) {
        let (stream, sign) = if self.config.antithetic {
            ((i / 2) as u64, if i.is_multiple_of(2) { 1.0 } else { -1.0 })
        } else {
            (i as u64, 1.0)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(stream);
        x[0] = 0.0;
        y[0] = 0.0;
        for k in 0..self.drifts.len() {
            let z1: f64 = StandardNormal.sample(&mut rng);
            let z2: f64 = StandardNormal.sample(&mut rng);
            let (nx, ny) = self
                .transition
                .apply(x[k], y[k], self.drifts[k], (sign * z1, sign * z2));
            x[k + 1] = nx;
            y[k + 1] = ny;
        }
    }
}

/// Callback receiving `(path index, x path, y path)`.
pub type PathVisitor<'a> = dyn FnMut(usize, &[f64], &[f64]) + 'a;

/// Anything that can replay simulated paths in index order.
pub trait PathSource {
    fn config(&self) -> &SimConfig;
    fn times(&self) -> &[f64];
    /// Calls `f(i, x_path, y_path)` for every path in increasing `i`.
    fn for_each_path(&self, f: &mut PathVisitor<'_>);
}

impl PathSource for PathGenerator {
    fn config(&self) -> &SimConfig {
        &self.config
    }

    fn times(&self) -> &[f64] {
        &self.times
    }

    fn for_each_path(&self, f: &mut PathVisitor<'_>) {
        let n = self.times.len();
        let mut x = alloc::vec![0.0; n];
        let mut y = alloc::vec![0.0; n];
        for i in 0..self.config.n_paths {
            self.fill_path(i, &mut x, &mut y);
            f(i, &x, &y);
        }
    }
}

/// Materialised factor paths on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet {
    pub config: SimConfig,
    pub times: Vec<f64>,
    /// Row-major, one row of `times.len()` values per path.
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl ScenarioSet {
    pub fn n_paths(&self) -> usize {
        self.config.n_paths
    }

    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    pub fn x_path(&self, i: usize) -> &[f64] {
        let n = self.n_times();
        &self.x[i * n..(i + 1) * n]
    }

    pub fn y_path(&self, i: usize) -> &[f64] {
        let n = self.n_times();
        &self.y[i * n..(i + 1) * n]
    }

    /// Short rate `x + y + φ(t)` of path `i` at grid index `k`.
    pub fn short_rate(&self, curve: &DiscountCurve, p: &G2Params, i: usize, k: usize) -> Result<f64> {
        Ok(self.x_path(i)[k] + self.y_path(i)[k] + phi(curve, p, self.times[k])?)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_times();
        if n == 0 || self.x.len() != n * self.n_paths() || self.y.len() != self.x.len() {
            return Err(Error::InvalidInput("scenario dimensions are inconsistent".into()));
        }
        Ok(())
    }
}

impl PathSource for ScenarioSet {
    fn config(&self) -> &SimConfig {
        &self.config
    }

    fn times(&self) -> &[f64] {
        &self.times
    }

    fn for_each_path(&self, f: &mut PathVisitor<'_>) {
        for i in 0..self.n_paths() {
            f(i, self.x_path(i), self.y_path(i));
        }
    }
}

/// Simulates and stores all paths. `spec` is required under ℙ and ignored
/// under ℚ.
pub fn simulate(p: &G2Params, spec: Option<&PremiumSpec>, config: &SimConfig) -> Result<ScenarioSet> {
    let gen = PathGenerator::new(p, spec, config)?;
    let n = gen.times().len();
    let total = config
        .n_paths
        .checked_mul(n)
        .ok_or_else(|| Error::InvalidConfig(format!("{} paths x {n} times overflows", config.n_paths)))?;
    let mut x = Vec::new();
    let mut y = Vec::new();
    if x.try_reserve_exact(total).is_err() || y.try_reserve_exact(total).is_err() {
        return Err(Error::InvalidConfig(format!(
            "cannot allocate {} paths x {n} times; stream the paths instead",
            config.n_paths
        )));
    }
    x.resize(total, 0.0);
    y.resize(total, 0.0);
    for (i, (xr, yr)) in x.chunks_exact_mut(n).zip(y.chunks_exact_mut(n)).enumerate() {
        gen.fill_path(i, xr, yr);
    }
    Ok(ScenarioSet {
        config: *config,
        times: gen.times,
        x,
        y,
    })
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    /// Number of independent samples behind the estimate.
    pub samples: u64,
}

impl Estimate {
    /// `|mean − target| ≤ k·s.e. + slack`.
    pub fn within(&self, target: f64, k: f64, slack: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_error + slack
    }
}

/// Mean of a per-path statistic; antithetic pairs are averaged first so the
/// standard error reflects independent samples.
pub fn path_mean<S, F>(source: &S, mut stat: F) -> Estimate
where
    S: PathSource + ?Sized,
    F: FnMut(&[f64], &[f64]) -> f64,
{
    let antithetic = source.config().antithetic;
    let mut stats = RunningStats::new();
    let mut pending: Option<f64> = None;
    source.for_each_path(&mut |_, x, y| {
        let v = stat(x, y);
        if antithetic {
            match pending.take() {
                Some(first) => stats.push(0.5 * (first + v)),
                None => pending = Some(v),
            }
        } else {
            stats.push(v);
        }
    });
    if let Some(v) = pending {
        stats.push(v);
    }
    Estimate {
        mean: stats.mean(),
        std_error: stats.std_error(),
        samples: stats.count(),
    }
}

// Trapezoid of x + y over the first `k + 1` grid points with stride `every`.
fn trapezoid(x: &[f64], y: &[f64], h: f64, k: usize, every: usize) -> f64 {
    let mut s = 0.5 * (x[0] + y[0] + x[k] + y[k]);
    let mut j = every;
    while j < k {
        s += x[j] + y[j];
        j += every;
    }
    s * h * every as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BondCheckReport {
    pub measure: Measure,
    pub maturity: f64,
    /// `df(T)` from the curve.
    pub target: f64,
    /// MC estimate of the discounted payoff on the simulation grid.
    pub estimate: Estimate,
    /// Same paths, integrals on a grid of twice the step.
    pub coarse: Option<f64>,
    /// Richardson estimate of the trapezoid bias of `estimate`,
    /// `(coarse − fine) / 3`.
    pub bias: Option<f64>,
    pub step: f64,
}

impl BondCheckReport {
    /// `|estimate − target| ≤ k s.e. + |bias|`.
    pub fn passes(&self, k: f64) -> bool {
        self.estimate.within(self.target, k, self.bias.map_or(0.0, f64::abs))
    }

    /// Estimate divided by the target.
    pub fn ratio(&self) -> f64 {
        self.estimate.mean / self.target
    }
}

/// Discounted bond payoffs averaged over paths against `df(T)`.
///
/// Under ℚ the payoff is `exp(−∫r)`. Under ℙ it is `P(T,T)/X(T)` with
/// `X(t) = exp(∫_0^t (r − B(a,u,T) a d_x − B(b,u,T) b d_y) du)`, whose
/// expectation is `P(0,T)` as well. `∫φ` and the premium parts are exact;
/// `∫(x + y)` uses the trapezoid rule on the grid.
pub fn mc_bond_check<S: PathSource + ?Sized>(
    source: &S,
    curve: &DiscountCurve,
    p: &G2Params,
    spec: Option<&PremiumSpec>,
    maturity: f64,
) -> Result<BondCheckReport> {
    let cfg = *source.config();
    let k = cfg
        .grid_index(maturity)
        .filter(|&k| k > 0)
        .ok_or_else(|| Error::InvalidInput(format!("maturity {maturity} is not a positive grid time")))?;
    let premium = match (cfg.measure, spec) {
        (Measure::Q, _) => 0.0,
        (Measure::P, Some(s)) => {
            let (ix, iy) = s.premium_integrals(p, maturity);
            ix + iy
        }
        (Measure::P, None) => {
            return Err(Error::InvalidInput("real-world bond check needs the premium spec".into()))
        }
    };
    let deterministic = integrated_phi(curve, p, 0.0, maturity)? - premium;
    let h = cfg.step_years;
    let estimate = path_mean(source, |x, y| exp(-deterministic - trapezoid(x, y, h, k, 1)));
    let coarse = (k % 2 == 0).then(|| path_mean(source, |x, y| exp(-deterministic - trapezoid(x, y, h, k, 2))).mean);
    Ok(BondCheckReport {
        measure: cfg.measure,
        maturity,
        target: curve.discount(maturity)?,
        estimate,
        coarse,
        bias: coarse.map(|c| (c - estimate.mean) / 3.0),
        step: h,
    })
}

/// One sample moment against its closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentLine {
    pub name: &'static str,
    pub sample: f64,
    pub expected: f64,
    pub std_error: f64,
    /// Deviation beyond four standard errors.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    pub measure: Measure,
    pub maturity: f64,
    pub lines: Vec<MomentLine>,
}

impl MomentReport {
    pub fn any_flagged(&self) -> bool {
        self.lines.iter().any(|l| l.flagged)
    }

    pub fn line(&self, name: &str) -> Option<&MomentLine> {
        self.lines.iter().find(|l| l.name == name)
    }
}

/// Sample mean/variance of `I(0,T) = ∫_0^T r du` and of `x(T)`, `y(T)`
/// against their closed forms. Under ℙ the means shift by the premium
/// terms; the variances are the same under both measures.
pub fn moment_check<S: PathSource + ?Sized>(
    source: &S,
    curve: &DiscountCurve,
    p: &G2Params,
    spec: Option<&PremiumSpec>,
    maturity: f64,
) -> Result<MomentReport> {
    let cfg = *source.config();
    let k = cfg
        .grid_index(maturity)
        .filter(|&k| k > 0)
        .ok_or_else(|| Error::InvalidInput(format!("maturity {maturity} is not a positive grid time")))?;
    let spec = match (cfg.measure, spec) {
        (Measure::Q, _) => PremiumSpec::ZERO,
        (Measure::P, Some(s)) => *s,
        (Measure::P, None) => return Err(Error::InvalidInput("real-world moments need the premium spec".into())),
    };
    let h = cfg.step_years;
    let phi_int = integrated_phi(curve, p, 0.0, maturity)?;
    let mut ints = RunningStats::new();
    let mut xs = RunningStats::new();
    let mut ys = RunningStats::new();
    source.for_each_path(&mut |_, x, y| {
        ints.push(phi_int + trapezoid(x, y, h, k, 1));
        xs.push(x[k]);
        ys.push(y[k]);
    });
    // antithetic pairs are dependent: count pairs as the independent units
    let shrink = if cfg.antithetic { sqrt(2.0) } else { 1.0 };
    let (px, py) = spec.premium_integrals(p, maturity);
    let mut lines = Vec::new();
    let mut push = |name, st: &RunningStats, expected: f64, variance: bool| {
        let (sample, se) = if variance {
            (st.variance(), st.variance_std_error() * shrink)
        } else {
            (st.mean(), st.std_error() * shrink)
        };
        let flagged = (sample - expected).abs() > 4.0 * se && (sample - expected).abs() > 1e-300;
        lines.push(MomentLine {
            name,
            sample,
            expected,
            std_error: se,
            flagged,
        });
    };
    push("mean_integral", &ints, phi_int + px + py, false);
    push("var_integral", &ints, integrated_variance(p, 0.0, maturity), true);
    push("mean_x", &xs, spec.rp_x(p, maturity), false);
    push("var_x", &xs, p.sigma * p.sigma * loading(2.0 * p.a, maturity), true);
    push("mean_y", &ys, spec.rp_y(p, maturity), false);
    push("var_y", &ys, p.eta * p.eta * loading(2.0 * p.b, maturity), true);
    Ok(MomentReport {
        measure: cfg.measure,
        maturity,
        lines,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_params() -> G2Params {
        G2Params::new(0.2997, 0.0407, 0.0114, 0.0114, -0.9998).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig::monthly(10, 10.0, Measure::Q, 1).validate().is_ok());
        let mut c = SimConfig::monthly(10, 10.05, Measure::Q, 1);
        assert!(c.validate().is_err());
        c.horizon_years = 10.0;
        c.n_paths = 1;
        c.antithetic = true;
        assert!(c.validate().is_err());
        assert_eq!(SimConfig::monthly(1, 10.0, Measure::Q, 1).grid_index(5.0), Some(60));
    }

    #[test]
    fn deterministic_steps() {
        let p = G2Params::new(0.3, 0.05, 0.0, 0.0, 0.0).unwrap();
        let s = step_exact(&p, None, FactorState::new(1.0, 0.02, -0.01), 0.5, (1.3, -0.4));
        assert!((s.x - 0.02 * (-0.15f64).exp()).abs() < 1e-18);
        assert!((s.y + 0.01 * (-0.025f64).exp()).abs() < 1e-18);
        let spec = PremiumSpec::constant(0.03, -0.02);
        let s = step_exact(&p, Some(&spec), FactorState::origin(), 400.0, (0.0, 0.0));
        assert!((s.x - 0.03).abs() < 1e-15 && (s.y + 0.02).abs() < 1e-9);
    }

    #[test]
    fn rank_one_correlation() {
        // equal speeds make the one-step covariance singular at ρ = −1
        let p = G2Params::new(0.3, 0.3, 0.01, 0.02, -1.0).unwrap();
        let t = Transition::new(&p, 1.0 / 12.0);
        assert_eq!(t.l22, 0.0);
        assert!(t.l21 < 0.0);
    }

    #[test]
    fn streams_do_not_depend_on_path_count() {
        let p = reference_params();
        let small = simulate(&p, None, &SimConfig::monthly(3, 1.0, Measure::Q, 9)).unwrap();
        let big = simulate(&p, None, &SimConfig::monthly(5, 1.0, Measure::Q, 9)).unwrap();
        assert_eq!(small.x_path(2), big.x_path(2));
        assert_eq!(small.y_path(1), big.y_path(1));
        assert_eq!(small.x_path(0)[0], 0.0);
    }

    #[test]
    fn antithetic_pairs_mirror() {
        let p = reference_params();
        let mut c = SimConfig::monthly(4, 1.0, Measure::Q, 3);
        c.antithetic = true;
        let s = simulate(&p, None, &c).unwrap();
        for (a, b) in s.x_path(2).iter().zip(s.x_path(3)) {
            assert_eq!(*a, -*b);
        }
    }

    #[test]
    fn real_world_needs_spec() {
        let c = SimConfig::monthly(2, 1.0, Measure::P, 3);
        assert!(simulate(&reference_params(), None, &c).is_err());
    }

    #[test]
    fn deterministic_bond_check_is_exact_up_to_trapezoid() {
        let p = G2Params::new(0.3, 0.05, 0.0, 0.0, 0.0).unwrap();
        let curve = DiscountCurve::flat(0.01, 20.0).unwrap();
        let set = simulate(&p, None, &SimConfig::monthly(4, 10.0, Measure::Q, 1)).unwrap();
        let r = mc_bond_check(&set, &curve, &p, None, 10.0).unwrap();
        assert!((r.estimate.mean - r.target).abs() < 1e-15);
        assert_eq!(r.estimate.std_error, 0.0);
        let m = moment_check(&set, &curve, &p, None, 10.0).unwrap();
        assert_eq!(m.line("var_integral").unwrap().sample, 0.0);
        assert!(!m.any_flagged());
    }
}
