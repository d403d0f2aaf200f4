//! `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Unknown keys are an
//! error so that typos do not silently fall back to defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use g2pp_core::measure::PremiumKind;
use g2pp_core::{G2Params, Measure, SimplexConfig};

use crate::error::{CliError, Result};

pub const KEYS: &[&str] = &[
    "start.a",
    "start.b",
    "start.sigma",
    "start.eta",
    "start.rho",
    "simplex.max_iter",
    "simplex.tol_x",
    "simplex.tol_f",
    "simplex.restarts",
    "simplex.initial_step",
    "pricing.frequency",
    "premium.kind",
    "premium.tau_months",
    "extrapolate",
    "sim.n_paths",
    "sim.step_years",
    "sim.horizon_years",
    "sim.measure",
    "sim.antithetic",
    "sim.seed",
    "project.horizon_years",
    "project.step_years",
    "project.tenors",
];

#[derive(Debug, Clone, Default)]
pub struct Config {
    path: Option<PathBuf>,
    /// value and line number
    values: BTreeMap<String, (String, u64)>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(path, &text)
    }

    pub fn parse(path: &Path, text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i as u64 + 1;
            let s = raw.trim();
            if s.is_empty() || s.starts_with('#') {
                continue;
            }
            let err = |message: String| CliError::Parse {
                path: path.to_path_buf(),
                row: line,
                message,
            };
            let (k, v) = s.split_once('=').ok_or_else(|| err(format!("expected `key = value`, got {s:?}")))?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(err(format!("unknown key `{k}`")));
            }
            if values.insert(k.to_owned(), (v.to_owned(), line)).is_some() {
                return Err(err(format!("duplicate key `{k}`")));
            }
        }
        Ok(Self {
            path: Some(path.to_path_buf()),
            values,
        })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|(v, _)| v.as_str())
    }

    fn bad(&self, key: &str, what: &str) -> CliError {
        let (v, line) = &self.values[key];
        CliError::Parse {
            path: self.path.clone().unwrap_or_default(),
            row: *line,
            message: format!("`{key}` must be {what}, got {v:?}"),
        }
    }

    pub fn get<T: FromStr>(&self, key: &str, what: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| self.bad(key, what)),
        }
    }

    pub fn real(&self, key: &str) -> Result<Option<f64>> {
        let v: Option<f64> = self.get(key, "a real number")?;
        match v {
            Some(x) if !x.is_finite() => Err(self.bad(key, "finite")),
            v => Ok(v),
        }
    }

    pub fn flag(&self, key: &str) -> Result<bool> {
        Ok(self.get(key, "true or false")?.unwrap_or(false))
    }

    pub fn kind(&self) -> Result<Option<PremiumKind>> {
        match self.raw("premium.kind") {
            None => Ok(None),
            Some(v) => PremiumKind::parse(v)
                .map(Some)
                .ok_or_else(|| self.bad("premium.kind", "constant, step or linear")),
        }
    }

    pub fn measure(&self) -> Result<Option<Measure>> {
        match self.raw("sim.measure") {
            None => Ok(None),
            Some("Q" | "q") => Ok(Some(Measure::Q)),
            Some("P" | "p") => Ok(Some(Measure::P)),
            Some(_) => Err(self.bad("sim.measure", "Q or P")),
        }
    }

    pub fn reals(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|s| s.trim().parse::<f64>().ok().filter(|x| x.is_finite()))
                .collect::<Option<Vec<_>>>()
                .map(Some)
                .ok_or_else(|| self.bad(key, "a comma-separated list of reals")),
        }
    }

    pub fn simplex(&self) -> Result<SimplexConfig> {
        let d = SimplexConfig::default();
        let start = G2Params {
            a: self.real("start.a")?.unwrap_or(d.start.a),
            b: self.real("start.b")?.unwrap_or(d.start.b),
            sigma: self.real("start.sigma")?.unwrap_or(d.start.sigma),
            eta: self.real("start.eta")?.unwrap_or(d.start.eta),
            rho: self.real("start.rho")?.unwrap_or(d.start.rho),
        };
        let cfg = SimplexConfig {
            start,
            max_iter: self.get("simplex.max_iter", "a count")?.unwrap_or(d.max_iter),
            tol_x: self.real("simplex.tol_x")?.unwrap_or(d.tol_x),
            tol_f: self.real("simplex.tol_f")?.unwrap_or(d.tol_f),
            restarts: self.get("simplex.restarts", "a count")?.unwrap_or(d.restarts),
            initial_step: self.real("simplex.initial_step")?.unwrap_or(d.initial_step),
            frequency: self.frequency()?,
        };
        cfg.validate().map_err(CliError::model("configuration"))?;
        Ok(cfg)
    }

    pub fn frequency(&self) -> Result<u32> {
        Ok(self.get("pricing.frequency", "a positive count")?.unwrap_or(1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> Result<Config> {
        Config::parse(Path::new("c.cfg"), text)
    }

    #[test]
    fn parses_and_types() {
        let c = cfg("# comment\nstart.a = 0.3\nsimplex.restarts=2\npremium.kind = step\nproject.tenors = 0.25, 10\n").unwrap();
        let s = c.simplex().unwrap();
        assert_eq!(s.start.a, 0.3);
        assert_eq!(s.restarts, 2);
        assert_eq!(c.kind().unwrap(), Some(PremiumKind::Step));
        assert_eq!(c.reals("project.tenors").unwrap(), Some(vec![0.25, 10.0]));
    }

    #[test]
    fn unknown_key_names_line() {
        let e = cfg("start.a = 1\nstart.z = 2\n").unwrap_err().to_string();
        assert!(e.contains("row 2") && e.contains("start.z"), "{e}");
    }

    #[test]
    fn bad_value() {
        let c = cfg("simplex.max_iter = lots\n").unwrap();
        assert!(c.simplex().is_err());
        assert!(cfg("start.a 1\n").is_err());
        assert!(cfg("start.a=1\nstart.a=2\n").is_err());
    }
}
