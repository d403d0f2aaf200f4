//! Backtest manifests.
//!
//! ```text
//! [global]
//! horizon_years = 40
//! tenor_years = 10
//! extrapolate = true
//!
//! [snapshot 2019-09-30]
//! curve = curves/2019-09-30.csv
//! params = params.csv          # or: swaptions = swaptions.csv
//! tau_months = 15
//! short = 1.25, 1.5, -0.003
//! short = 1.25, 11.25, 0.010
//! long = 40, 40.25, 0.0113
//! long = 40, 50, 0.0191
//! ```
//!
//! Relative paths resolve against the manifest's directory. Dates are
//! `YYYY-MM-DD` or `DD.MM.YYYY`.

use std::path::{Path, PathBuf};

use g2pp_core::measure::PremiumKind;
use g2pp_core::{CalendarDate, RateForecast};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalSettings {
    /// Horizon of the stability summary.
    pub horizon_years: f64,
    /// Tenor of the summarised expected rate.
    pub tenor_years: f64,
    pub extrapolate: bool,
    pub step_years: f64,
    /// Tenors of the per-snapshot projection table.
    pub tenors: Vec<f64>,
}

impl Default for GlobalSettings {
    fn default() -> Self {
        Self {
            horizon_years: 40.0,
            tenor_years: 10.0,
            extrapolate: false,
            step_years: 1.0 / 12.0,
            tenors: vec![0.25, 10.0, 20.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamSource {
    Swaptions(PathBuf),
    Params(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub date: CalendarDate,
    pub line: u64,
    pub curve: PathBuf,
    pub source: ParamSource,
    pub tau_months: u32,
    pub short: Vec<RateForecast>,
    pub long: Vec<RateForecast>,
    pub kinds: Vec<PremiumKind>,
}

impl Snapshot {
    pub fn label(&self) -> String {
        self.date.to_string()
    }

    pub fn tau_years(&self) -> f64 {
        f64::from(self.tau_months) / 12.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub path: PathBuf,
    pub global: GlobalSettings,
    /// Ascending by date.
    pub snapshots: Vec<Snapshot>,
}

#[derive(Default)]
struct Pending {
    date: Option<(CalendarDate, u64)>,
    curve: Option<PathBuf>,
    swaptions: Option<PathBuf>,
    params: Option<PathBuf>,
    tau_months: Option<u32>,
    short: Vec<RateForecast>,
    long: Vec<RateForecast>,
    kinds: Option<Vec<PremiumKind>>,
}

enum Section {
    None,
    Global,
    Snapshot(Pending),
}

pub fn parse_date(s: &str) -> Option<CalendarDate> {
    let (y, m, d) = if let Some((y, rest)) = s.split_once('-') {
        let (m, d) = rest.split_once('-')?;
        (y, m, d)
    } else {
        let (d, rest) = s.split_once('.')?;
        let (m, y) = rest.split_once('.')?;
        (y, m, d)
    };
    CalendarDate::new(y.parse().ok()?, m.parse().ok()?, d.parse().ok()?).ok()
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(path, &text)
    }

    pub fn parse(path: &Path, text: &str) -> Result<Self> {
        let base = path.parent().unwrap_or(Path::new(""));
        let mut global = GlobalSettings::default();
        let mut snapshots = Vec::new();
        let mut section = Section::None;

        for (i, raw) in text.lines().enumerate() {
            let line = i as u64 + 1;
            let err = |message: String| CliError::Parse {
                path: path.to_path_buf(),
                row: line,
                message,
            };
            let s = raw.split_once('#').map_or(raw, |(a, _)| a).trim();
            if s.is_empty() {
                continue;
            }
            if let Some(head) = s.strip_prefix('[').and_then(|h| h.strip_suffix(']')) {
                if let Section::Snapshot(p) = std::mem::replace(&mut section, Section::None) {
                    snapshots.push(finish(path, p)?);
                }
                let head = head.trim();
                section = if head == "global" {
                    Section::Global
                } else if let Some(d) = head.strip_prefix("snapshot") {
                    let d = d.trim();
                    let date = parse_date(d).ok_or_else(|| err(format!("bad snapshot date {d:?}")))?;
                    Section::Snapshot(Pending {
                        date: Some((date, line)),
                        ..Pending::default()
                    })
                } else {
                    return Err(err(format!("unknown section [{head}]")));
                };
                continue;
            }
            let (k, v) = s.split_once('=').ok_or_else(|| err(format!("expected `key = value`, got {s:?}")))?;
            let (k, v) = (k.trim(), v.trim());
            let real = |v: &str| v.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| err(format!("`{k}` needs a real, got {v:?}")));
            match &mut section {
                Section::None => return Err(err("key outside any section".into())),
                Section::Global => match k {
                    "horizon_years" => global.horizon_years = real(v)?,
                    "tenor_years" => global.tenor_years = real(v)?,
                    "step_years" => global.step_years = real(v)?,
                    "extrapolate" => {
                        global.extrapolate = v.parse().map_err(|_| err(format!("`extrapolate` must be true or false, got {v:?}")))?
                    }
                    "tenors" => global.tenors = v.split(',').map(|x| real(x.trim())).collect::<Result<_>>()?,
                    _ => return Err(err(format!("unknown global key `{k}`"))),
                },
                Section::Snapshot(p) => match k {
                    "curve" => p.curve = Some(base.join(v)),
                    "swaptions" => p.swaptions = Some(base.join(v)),
                    "params" => p.params = Some(base.join(v)),
                    "tau_months" => {
                        p.tau_months = Some(v.parse().map_err(|_| err(format!("`tau_months` must be a whole number, got {v:?}")))?)
                    }
                    "short" | "long" => {
                        let parts: Vec<f64> = v.split(',').map(|x| real(x.trim())).collect::<Result<_>>()?;
                        let [t, m, r] = parts[..] else {
                            return Err(err(format!("`{k}` needs `horizon, maturity, rate`, got {v:?}")));
                        };
                        let f = RateForecast::new(t, m, r).map_err(|e| err(e.to_string()))?;
                        if k == "short" {
                            p.short.push(f)
                        } else {
                            p.long.push(f)
                        }
                    }
                    "kinds" => {
                        p.kinds = Some(
                            v.split(',')
                                .map(|x| PremiumKind::parse(x.trim()).ok_or_else(|| err(format!("unknown premium kind {x:?}"))))
                                .collect::<Result<_>>()?,
                        )
                    }
                    _ => return Err(err(format!("unknown snapshot key `{k}`"))),
                },
            }
        }
        if let Section::Snapshot(p) = section {
            snapshots.push(finish(path, p)?);
        }
        if snapshots.is_empty() {
            return Err(CliError::Format {
                path: path.to_path_buf(),
                message: "manifest lists no snapshots".into(),
            });
        }
        if !(global.step_years > 0.0) || !(global.tenor_years > 0.0) || !(global.horizon_years >= 0.0) {
            return Err(CliError::Format {
                path: path.to_path_buf(),
                message: "global horizon, tenor and step must be positive".into(),
            });
        }
        snapshots.sort_by_key(|s| s.date);
        for w in snapshots.windows(2) {
            if w[0].date == w[1].date {
                return Err(CliError::Parse {
                    path: path.to_path_buf(),
                    row: w[1].line.max(w[0].line),
                    message: format!("duplicate snapshot date {}", w[0].date),
                });
            }
        }
        Ok(Self {
            path: path.to_path_buf(),
            global,
            snapshots,
        })
    }
}

fn finish(path: &Path, p: Pending) -> Result<Snapshot> {
    let (date, line) = p.date.expect("snapshot sections always carry a date");
    let err = |message: String| CliError::Parse {
        path: path.to_path_buf(),
        row: line,
        message: format!("snapshot {date}: {message}"),
    };
    let source = match (p.swaptions, p.params) {
        (Some(s), None) => ParamSource::Swaptions(s),
        (None, Some(q)) => ParamSource::Params(q),
        (Some(_), Some(_)) => return Err(err("give either `swaptions` or `params`, not both".into())),
        (None, None) => return Err(err("needs `swaptions` or `params`".into())),
    };
    Ok(Snapshot {
        date,
        line,
        curve: p.curve.ok_or_else(|| err("missing `curve`".into()))?,
        source,
        tau_months: p.tau_months.filter(|&m| m > 0).ok_or_else(|| err("missing or zero `tau_months`".into()))?,
        short: p.short,
        long: p.long,
        kinds: p.kinds.unwrap_or_else(|| PremiumKind::ALL.to_vec()),
    })
}
