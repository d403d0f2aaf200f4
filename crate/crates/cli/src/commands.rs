//! Subcommand implementations. Each writes its files under `ctx.out`.

use std::path::{Path, PathBuf};

use g2pp_core::calibration::CalibrationProblem;
use g2pp_core::measure::PremiumKind;
use g2pp_core::simulate::PathGenerator;
use g2pp_core::{
    calibrate_p, calibrate_q, expected_rate_p, expected_rate_q, DiscountCurve, G2Params, Measure,
    PremiumSpec, RateForecast, SimConfig, SwaptionQuote,
};
use rayon::prelude::*;

use crate::config::Config;
use crate::error::{CliError, Result};
use crate::io::{self, CsvOut, Table};
use crate::manifest::{GlobalSettings, Manifest, ParamSource, Snapshot};
use crate::scenario;

/// Settings shared by every subcommand. Flags win over config keys.
#[derive(Debug, Clone, Default)]
pub struct Context {
    pub config: Config,
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub tau_months: Option<u32>,
    pub kind: Option<PremiumKind>,
}

impl Context {
    pub fn tau_years(&self) -> Result<f64> {
        let months = match self.tau_months {
            Some(m) => Some(m),
            None => self.config.get::<u32>("premium.tau_months", "a whole number of months")?,
        };
        match months {
            Some(m) if m > 0 => Ok(f64::from(m) / 12.0),
            Some(_) => Err(CliError::Usage("tau must be at least one month".into())),
            None => Err(CliError::Usage("set --tau-months or premium.tau_months".into())),
        }
    }

    pub fn kind(&self) -> Result<Option<PremiumKind>> {
        match self.kind {
            Some(k) => Ok(Some(k)),
            None => self.config.kind(),
        }
    }

    pub fn extrapolate(&self, flag: bool) -> Result<bool> {
        Ok(flag || self.config.flag("extrapolate")?)
    }

    fn out_file(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

fn load_curve(path: &Path, extrapolate: bool) -> Result<DiscountCurve> {
    Ok(io::read_curve(path)?.with_extrapolation(extrapolate))
}

/// `n` steps of `step` covering `horizon`, or an error if it does not divide.
fn grid(horizon: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(horizon >= 0.0) {
        return Err(CliError::Usage(format!("grid needs step > 0 and horizon >= 0, got {step} and {horizon}")));
    }
    let n = (horizon / step).round();
    if (n * step - horizon).abs() > 1e-9 * horizon.max(1.0) {
        return Err(CliError::Usage(format!("horizon {horizon} is not a multiple of step {step}")));
    }
    Ok((0..=n as usize).map(|k| k as f64 * step).collect())
}

/// Picks one spec from a premium file: the only row, or the row of `kind`.
pub fn select_spec(specs: &[PremiumSpec], kind: Option<PremiumKind>) -> Result<PremiumSpec> {
    match (specs, kind) {
        ([one], None) => Ok(*one),
        (_, Some(k)) => specs
            .iter()
            .find(|s| s.kind() == k)
            .copied()
            .ok_or_else(|| CliError::Usage(format!("premium file has no `{k}` row"))),
        (_, None) => Err(CliError::Usage("premium file has several rows; choose one with --kind".into())),
    }
}

// calibrate-q

#[derive(Debug, Clone, Default)]
pub struct CalibrateQArgs {
    pub curve: PathBuf,
    pub swaptions: Option<PathBuf>,
    /// Pre-computed parameters; bypasses the search.
    pub params: Option<PathBuf>,
    pub extrapolate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrateQOutcome {
    pub params: G2Params,
    pub objective: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
}

pub fn fit_table(curve: &DiscountCurve, quotes: &[SwaptionQuote], p: &G2Params, frequency: u32) -> Result<CsvOut> {
    let problem = CalibrationProblem::new(curve, quotes, frequency).map_err(CliError::model("market prices"))?;
    let model = problem.model_prices(p).map_err(CliError::model("model prices"))?;
    let mut out = CsvOut::new(&["expiry_years", "tenor_years", "strike", "market_price", "model_price", "rel_error"]);
    for ((q, inst), (&mkt, &mdl)) in quotes
        .iter()
        .zip(problem.instruments())
        .zip(problem.market_prices().iter().zip(&model))
    {
        let rel = (mkt > 0.0).then(|| (mdl - mkt) / mkt);
        out.row([
            q.expiry_years.to_string(),
            q.tenor_years.to_string(),
            inst.fixed_rate.to_string(),
            mkt.to_string(),
            mdl.to_string(),
            io::opt(rel),
        ]);
    }
    Ok(out)
}

pub fn cmd_calibrate_q(ctx: &Context, args: &CalibrateQArgs) -> Result<CalibrateQOutcome> {
    let curve = load_curve(&args.curve, ctx.extrapolate(args.extrapolate)?)?;
    let quotes = args.swaptions.as_deref().map(io::read_swaptions).transpose()?;
    let frequency = ctx.config.frequency()?;
    let outcome = match (&args.params, &quotes) {
        (Some(path), _) => {
            let (p, stored) = io::read_params(path)?;
            let objective = match &quotes {
                Some(q) => Some(
                    CalibrationProblem::new(&curve, q, frequency)
                        .and_then(|pr| pr.objective(&p))
                        .map_err(CliError::model("objective at the supplied parameters"))?,
                ),
                None => stored,
            };
            CalibrateQOutcome {
                params: p,
                objective,
                iterations: 0,
                converged: true,
            }
        }
        (None, Some(q)) => {
            let cfg = ctx.config.simplex()?;
            let r = calibrate_q(&curve, q, &cfg).map_err(CliError::model("risk-neutral calibration"))?;
            for w in &r.warnings {
                eprintln!("warning: {w}");
            }
            CalibrateQOutcome {
                params: r.params,
                objective: Some(r.objective),
                iterations: r.iterations,
                converged: r.converged,
            }
        }
        (None, None) => return Err(CliError::Usage("calibrate-q needs --swaptions or --params".into())),
    };
    io::params_csv(&outcome.params, outcome.objective).save(&ctx.out_file("params.csv"))?;
    if let Some(q) = &quotes {
        fit_table(&curve, q, &outcome.params, frequency)?.save(&ctx.out_file("fit.csv"))?;
    }
    if !outcome.converged {
        return Err(CliError::NotConverged {
            iterations: outcome.iterations,
            objective: outcome.objective.unwrap_or(f64::NAN),
        });
    }
    Ok(outcome)
}

// calibrate-p

#[derive(Debug, Clone, Default)]
pub struct CalibratePArgs {
    pub curve: PathBuf,
    pub params: PathBuf,
    pub forecasts: PathBuf,
    pub extrapolate: bool,
}

/// Forecasts with horizon up to τ are short, the rest long.
pub fn split_forecasts(forecasts: &[RateForecast], tau: f64) -> (Vec<RateForecast>, Vec<RateForecast>) {
    forecasts.iter().partition(|f| f.horizon_years <= tau + 1e-12)
}

/// Fits `kind`, or all three kinds when `kind` is `None`. In the latter case
/// the constant kind only sees the short forecasts.
pub fn fit_premia(
    curve: &DiscountCurve,
    p: &G2Params,
    kind: Option<PremiumKind>,
    short: &[RateForecast],
    long: &[RateForecast],
    tau: f64,
) -> std::result::Result<Vec<PremiumSpec>, (PremiumKind, g2pp_core::Error)> {
    match kind {
        Some(k) => calibrate_p(curve, p, k, short, long, tau).map(|s| vec![s]).map_err(|e| (k, e)),
        None => PremiumKind::ALL
            .iter()
            .map(|&k| {
                let long = if k == PremiumKind::Constant { &[][..] } else { long };
                calibrate_p(curve, p, k, short, long, tau).map_err(|e| (k, e))
            })
            .collect(),
    }
}

pub fn cmd_calibrate_p(ctx: &Context, args: &CalibratePArgs) -> Result<Vec<PremiumSpec>> {
    let curve = load_curve(&args.curve, ctx.extrapolate(args.extrapolate)?)?;
    let (p, _) = io::read_params(&args.params)?;
    let forecasts = io::read_forecasts(&args.forecasts)?;
    let tau = ctx.tau_years()?;
    let (short, long) = split_forecasts(&forecasts, tau);
    let specs = fit_premia(&curve, &p, ctx.kind()?, &short, &long, tau)
        .map_err(|(k, e)| CliError::model(format!("{k} premium"))(e))?;
    io::premium_csv(&specs).save(&ctx.out_file("premium.csv"))?;
    Ok(specs)
}

// project

#[derive(Debug, Clone, Default)]
pub struct ProjectArgs {
    pub curve: PathBuf,
    pub params: PathBuf,
    pub premium: Option<PathBuf>,
    pub tenors: Option<Vec<f64>>,
    pub horizon_years: Option<f64>,
    pub step_years: Option<f64>,
    pub extrapolate: bool,
}

pub fn projection_table(
    curve: &DiscountCurve,
    p: &G2Params,
    spec: &PremiumSpec,
    tenors: &[f64],
    horizons: &[f64],
) -> g2pp_core::Result<CsvOut> {
    let mut out = CsvOut::new(&["horizon_years", "tenor_years", "expected_q", "expected_p"]);
    for &t in horizons {
        for &n in tenors {
            let q = expected_rate_q(curve, p, t, t + n)?;
            let pr = expected_rate_p(curve, p, spec, t, t + n)?;
            out.row([t.to_string(), n.to_string(), q.to_string(), pr.to_string()]);
        }
    }
    Ok(out)
}

fn tenors_or_default(given: Option<Vec<f64>>, config: &Config) -> Result<Vec<f64>> {
    let tenors = match given {
        Some(t) => t,
        None => config.reals("project.tenors")?.unwrap_or_else(|| GlobalSettings::default().tenors),
    };
    if tenors.is_empty() || tenors.iter().any(|&t| !(t > 0.0)) {
        return Err(CliError::Usage("tenors must be positive".into()));
    }
    Ok(tenors)
}

pub fn cmd_project(ctx: &Context, args: &ProjectArgs) -> Result<()> {
    let curve = load_curve(&args.curve, ctx.extrapolate(args.extrapolate)?)?;
    let (p, _) = io::read_params(&args.params)?;
    let spec = match &args.premium {
        Some(path) => select_spec(&io::read_premium(path)?, ctx.kind()?)?,
        None => PremiumSpec::ZERO,
    };
    let tenors = tenors_or_default(args.tenors.clone(), &ctx.config)?;
    let horizon = args.horizon_years.or(ctx.config.real("project.horizon_years")?).unwrap_or(40.0);
    let step = args.step_years.or(ctx.config.real("project.step_years")?).unwrap_or(1.0 / 12.0);
    let horizons = grid(horizon, step)?;
    projection_table(&curve, &p, &spec, &tenors, &horizons)
        .map_err(CliError::model("expected-rate projection"))?
        .save(&ctx.out_file("projection.csv"))
}

// rp-trajectory

#[derive(Debug, Clone, Default)]
pub struct RpArgs {
    pub params: PathBuf,
    pub premium: PathBuf,
    pub horizon_years: Option<f64>,
    pub step_years: Option<f64>,
}

pub fn rp_table(p: &G2Params, specs: &[PremiumSpec], times: &[f64]) -> CsvOut {
    let mut out = CsvOut::new(&["t", "variant", "rp_x", "rp_y", "rp_total"]);
    for &t in times {
        for s in specs {
            let (x, y) = (s.rp_x(p, t), s.rp_y(p, t));
            out.row([t.to_string(), s.kind().name().to_owned(), x.to_string(), y.to_string(), (x + y).to_string()]);
        }
    }
    out
}

pub fn cmd_rp_trajectory(ctx: &Context, args: &RpArgs) -> Result<()> {
    let (p, _) = io::read_params(&args.params)?;
    let mut specs = io::read_premium(&args.premium)?;
    if let Some(k) = ctx.kind()? {
        specs = vec![select_spec(&specs, Some(k))?];
    }
    let horizon = args.horizon_years.or(ctx.config.real("project.horizon_years")?).unwrap_or(40.0);
    let step = args.step_years.or(ctx.config.real("project.step_years")?).unwrap_or(1.0 / 12.0);
    rp_table(&p, &specs, &grid(horizon, step)?).save(&ctx.out_file("rp.csv"))
}

// simulate

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScenarioFormat {
    #[default]
    Csv,
    Binary,
    Both,
}

#[derive(Debug, Clone, Default)]
pub struct SimulateArgs {
    pub curve: PathBuf,
    pub params: PathBuf,
    pub premium: Option<PathBuf>,
    pub n_paths: Option<usize>,
    pub horizon_years: Option<f64>,
    pub step_years: Option<f64>,
    pub measure: Option<Measure>,
    pub antithetic: bool,
    pub format: ScenarioFormat,
    pub extrapolate: bool,
}

pub fn cmd_simulate(ctx: &Context, args: &SimulateArgs) -> Result<SimConfig> {
    let c = &ctx.config;
    let curve = load_curve(&args.curve, ctx.extrapolate(args.extrapolate)?)?;
    let (p, _) = io::read_params(&args.params)?;
    let config = SimConfig {
        n_paths: match args.n_paths {
            Some(n) => n,
            None => c.get("sim.n_paths", "a count")?.unwrap_or(1000),
        },
        step_years: args.step_years.or(c.real("sim.step_years")?).unwrap_or(1.0 / 12.0),
        horizon_years: args.horizon_years.or(c.real("sim.horizon_years")?).unwrap_or(40.0),
        measure: args.measure.or(c.measure()?).unwrap_or(Measure::Q),
        seed: match ctx.seed {
            Some(s) => s,
            None => c.get("sim.seed", "an unsigned integer")?.unwrap_or(0),
        },
        antithetic: args.antithetic || c.flag("sim.antithetic")?,
    };
    let spec = match (&args.premium, config.measure) {
        (Some(path), Measure::P) => Some(select_spec(&io::read_premium(path)?, ctx.kind()?)?),
        (None, Measure::P) => return Err(CliError::Usage("real-world simulation needs --premium".into())),
        (_, Measure::Q) => None,
    };
    let gen = PathGenerator::new(&p, spec.as_ref(), &config).map_err(CliError::model("simulation setup"))?;
    let csv = ctx.out_file("scenarios.csv");
    let bin = ctx.out_file("scenarios.bin");
    let (csv, bin) = match args.format {
        ScenarioFormat::Csv => (Some(csv.as_path()), None),
        ScenarioFormat::Binary => (None, Some(bin.as_path())),
        ScenarioFormat::Both => (Some(csv.as_path()), Some(bin.as_path())),
    };
    scenario::export(&gen, &curve, &p, csv, bin)?;
    Ok(config)
}

// average

/// Arithmetic mean of every numeric column of a rate history.
pub fn cmd_average(ctx: &Context, history: &Path) -> Result<Vec<(String, f64, usize)>> {
    let t = Table::read(history)?;
    let mut res = Vec::new();
    for (c, name) in t.headers.iter().enumerate() {
        let mut sum = 0.0;
        let mut count = 0usize;
        let mut numeric = true;
        for (_, cells) in &t.rows {
            match cells.get(c).map(String::as_str) {
                None | Some("") => {}
                Some(s) => match s.parse::<f64>() {
                    Ok(v) if v.is_finite() => {
                        sum += v;
                        count += 1;
                    }
                    _ => {
                        numeric = false;
                        break;
                    }
                },
            }
        }
        if numeric && count > 0 {
            res.push((name.clone(), sum / count as f64, count));
        }
    }
    if res.is_empty() {
        return Err(CliError::Format {
            path: history.to_path_buf(),
            message: "no numeric columns to average".into(),
        });
    }
    let mut out = CsvOut::new(&["column", "mean", "count"]);
    for (name, mean, count) in &res {
        out.row([name.clone(), mean.to_string(), count.to_string()]);
    }
    out.save(&ctx.out_file("average.csv"))?;
    Ok(res)
}

// backtest

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotResult {
    pub label: String,
    pub params: G2Params,
    pub specs: Vec<PremiumSpec>,
    /// Expected summary-tenor rate at the summary horizon, per spec.
    pub expected: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariantSummary {
    pub kind: PremiumKind,
    pub min: f64,
    pub max: f64,
}

impl VariantSummary {
    pub fn dispersion(&self) -> f64 {
        self.max - self.min
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestReport {
    pub results: Vec<SnapshotResult>,
    pub failures: Vec<(String, String)>,
    pub summary: Vec<VariantSummary>,
}

fn run_snapshot(ctx: &Context, global: &GlobalSettings, s: &Snapshot) -> Result<SnapshotResult> {
    let dir = ctx.out.join("snapshots").join(s.label());
    let curve = load_curve(&s.curve, ctx.extrapolate(global.extrapolate)?)?;
    let frequency = ctx.config.frequency()?;
    let p = match &s.source {
        ParamSource::Params(path) => {
            let (p, obj) = io::read_params(path)?;
            io::params_csv(&p, obj).save(&dir.join("params.csv"))?;
            p
        }
        ParamSource::Swaptions(path) => {
            let quotes = io::read_swaptions(path)?;
            let r = calibrate_q(&curve, &quotes, &ctx.config.simplex()?).map_err(CliError::model("risk-neutral calibration"))?;
            io::params_csv(&r.params, Some(r.objective)).save(&dir.join("params.csv"))?;
            fit_table(&curve, &quotes, &r.params, frequency)?.save(&dir.join("fit.csv"))?;
            if !r.converged {
                return Err(CliError::NotConverged {
                    iterations: r.iterations,
                    objective: r.objective,
                });
            }
            r.params
        }
    };
    let tau = s.tau_years();
    let mut specs = Vec::new();
    for &k in &s.kinds {
        let long = if k == PremiumKind::Constant { &[][..] } else { &s.long[..] };
        let spec = calibrate_p(&curve, &p, k, &s.short, long, tau).map_err(CliError::model(format!("{k} premium")))?;
        specs.push(spec);
    }
    io::premium_csv(&specs).save(&dir.join("premium.csv"))?;

    let horizons = grid(global.horizon_years, global.step_years)?;
    let mut proj = CsvOut::new(&["variant", "horizon_years", "tenor_years", "expected_q", "expected_p"]);
    for spec in &specs {
        for &t in &horizons {
            for &n in &global.tenors {
                let ctx_err = || format!("{} projection", spec.kind());
                let q = expected_rate_q(&curve, &p, t, t + n).map_err(CliError::model(ctx_err()))?;
                let pr = expected_rate_p(&curve, &p, spec, t, t + n).map_err(CliError::model(ctx_err()))?;
                proj.row([spec.kind().name().to_owned(), t.to_string(), n.to_string(), q.to_string(), pr.to_string()]);
            }
        }
    }
    proj.save(&dir.join("projection.csv"))?;
    rp_table(&p, &specs, &horizons).save(&dir.join("rp.csv"))?;

    let (h, n) = (global.horizon_years, global.tenor_years);
    let expected = specs
        .iter()
        .map(|spec| expected_rate_p(&curve, &p, spec, h, h + n))
        .collect::<g2pp_core::Result<Vec<_>>>()
        .map_err(CliError::model("summary expectation"))?;
    Ok(SnapshotResult {
        label: s.label(),
        params: p,
        specs,
        expected,
    })
}

/// Replays every snapshot, in parallel, then writes
///
/// * `summary.csv`: `variant,min,max,dispersion` of the expected
///   summary-tenor rate at the summary horizon across snapshots,
/// * `stability.csv`: the per-snapshot values behind the summary,
/// * `failures.csv`: `date,error` for snapshots that failed.
///
/// Returns an error after writing if any snapshot failed.
pub fn cmd_backtest(ctx: &Context, manifest_path: &Path) -> Result<BacktestReport> {
    let m = Manifest::load(manifest_path)?;
    let outcomes: Vec<Result<SnapshotResult>> = m
        .snapshots
        .par_iter()
        .map(|s| run_snapshot(ctx, &m.global, s))
        .collect();

    let mut results = Vec::new();
    let mut failures = Vec::new();
    for (s, o) in m.snapshots.iter().zip(outcomes) {
        match o {
            Ok(r) => results.push(r),
            Err(e) => failures.push((s.label(), e.to_string())),
        }
    }

    let mut summary = Vec::new();
    for k in PremiumKind::ALL {
        let vals: Vec<f64> = results
            .iter()
            .flat_map(|r| r.specs.iter().zip(&r.expected).filter(|(s, _)| s.kind() == k).map(|(_, &v)| v))
            .collect();
        if let (Some(min), Some(max)) = (
            vals.iter().copied().reduce(f64::min),
            vals.iter().copied().reduce(f64::max),
        ) {
            summary.push(VariantSummary { kind: k, min, max });
        }
    }

    let mut out = CsvOut::new(&["variant", "min", "max", "dispersion"]);
    for v in &summary {
        out.row([v.kind.name().to_owned(), v.min.to_string(), v.max.to_string(), v.dispersion().to_string()]);
    }
    out.save(&ctx.out_file("summary.csv"))?;

    let mut out = CsvOut::new(&["date", "variant", "horizon_years", "tenor_years", "expected_p"]);
    for r in &results {
        for (s, v) in r.specs.iter().zip(&r.expected) {
            out.row([
                r.label.clone(),
                s.kind().name().to_owned(),
                m.global.horizon_years.to_string(),
                m.global.tenor_years.to_string(),
                v.to_string(),
            ]);
        }
    }
    out.save(&ctx.out_file("stability.csv"))?;

    let mut out = CsvOut::new(&["date", "error"]);
    for (d, e) in &failures {
        out.row([d.as_str(), e.as_str()]);
    }
    out.save(&ctx.out_file("failures.csv"))?;

    if !failures.is_empty() {
        for (d, e) in &failures {
            eprintln!("snapshot {d} failed: {e}");
        }
        return Err(CliError::Backtest {
            failed: failures.len(),
            total: m.snapshots.len(),
        });
    }
    Ok(BacktestReport {
        results,
        failures,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_checks_multiples() {
        assert_eq!(grid(1.0, 0.25).unwrap(), [0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(grid(40.0, 1.0 / 12.0).unwrap().len(), 481);
        assert!(grid(1.0, 0.3).is_err());
        assert!(grid(1.0, 0.0).is_err());
    }

    #[test]
    fn split_by_tau() {
        let f = [
            RateForecast::new(2.0, 2.25, 0.0).unwrap(),
            RateForecast::new(40.0, 50.0, 0.0).unwrap(),
            RateForecast::new(1.0, 11.0, 0.0).unwrap(),
        ];
        let (s, l) = split_forecasts(&f, 2.0);
        assert_eq!(s.len(), 2);
        assert_eq!(l[0].horizon_years, 40.0);
    }

    #[test]
    fn spec_selection() {
        let c = PremiumSpec::constant(0.01, 0.0);
        let s = PremiumSpec::step(0.01, 0.0, 0.0, 0.0, 1.0).unwrap();
        assert_eq!(select_spec(&[c], None).unwrap(), c);
        assert_eq!(select_spec(&[c, s], Some(PremiumKind::Step)).unwrap(), s);
        assert!(select_spec(&[c, s], None).is_err());
        assert!(select_spec(&[c], Some(PremiumKind::Linear)).is_err());
    }
}
