//! CSV file formats.
//!
//! Every reader reports the offending file and line. Every writer prints
//! floats with `Display`, which is the shortest string that parses back to
//! the same `f64`, so emitted files re-ingest exactly.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use g2pp_core::measure::PremiumKind;
use g2pp_core::{DiscountCurve, G2Params, PremiumSpec, QuoteKind, RateForecast, SwaptionQuote};

use crate::error::{CliError, Result};

/// A parsed CSV file: trimmed cells, `#` comments skipped.
#[derive(Debug, Clone)]
pub struct Table {
    pub path: PathBuf,
    pub headers: Vec<String>,
    /// `(line, cells)` per data row.
    pub rows: Vec<(u64, Vec<String>)>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(path, &text)
    }

    pub fn parse(path: &Path, text: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(text.as_bytes());
        let headers: Vec<String> = rdr
            .headers()
            .map_err(|e| csv_error(path, e))?
            .iter()
            .map(str::to_owned)
            .collect();
        if headers.iter().all(String::is_empty) {
            return Err(format_error(path, "file is empty"));
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| csv_error(path, e))?;
            if rec.get(0).is_some_and(|c| c.starts_with('#')) || rec.iter().all(str::is_empty) {
                continue;
            }
            let line = rec.position().map_or(0, |p| p.line());
            rows.push((line, rec.iter().map(str::to_owned).collect()));
        }
        Ok(Self {
            path: path.to_path_buf(),
            headers,
            rows,
        })
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    pub fn require(&self, name: &str) -> Result<usize> {
        self.column(name)
            .ok_or_else(|| format_error(&self.path, format!("missing column `{name}`")))
    }

    pub fn parse_error(&self, line: u64, message: impl Into<String>) -> CliError {
        CliError::Parse {
            path: self.path.clone(),
            row: line,
            message: message.into(),
        }
    }

    pub fn cell<'a>(&self, line: u64, cells: &'a [String], col: usize) -> Result<&'a str> {
        cells
            .get(col)
            .map(String::as_str)
            .ok_or_else(|| self.parse_error(line, format!("missing field `{}`", self.headers[col])))
    }

    pub fn real(&self, line: u64, cells: &[String], col: usize) -> Result<f64> {
        let s = self.cell(line, cells, col)?;
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| self.parse_error(line, format!("`{}` is not a real number: {s:?}", self.headers[col])))
    }

    /// Empty cells read as `None`.
    pub fn optional_real(&self, line: u64, cells: &[String], col: Option<usize>) -> Result<Option<f64>> {
        match col {
            Some(c) if cells.get(c).is_some_and(|s| !s.is_empty()) => self.real(line, cells, c).map(Some),
            _ => Ok(None),
        }
    }

    fn model_error(&self, line: u64, e: g2pp_core::Error) -> CliError {
        self.parse_error(line, e.to_string())
    }
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    let row = e.position().map_or(0, |p| p.line());
    CliError::Parse {
        path: path.to_path_buf(),
        row,
        message: e.to_string(),
    }
}

fn format_error(path: &Path, message: impl Into<String>) -> CliError {
    CliError::Format {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Writes through a sibling temp file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let tmp = tmp_path(path);
    let mut f = fs::File::create(&tmp).map_err(|e| CliError::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| CliError::io(&tmp, e))?;
    f.sync_all().map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

pub(crate) fn tmp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".tmp");
    path.with_file_name(name)
}

/// In-memory CSV builder.
pub struct CsvOut {
    w: csv::Writer<Vec<u8>>,
}

impl CsvOut {
    pub fn new(headers: &[&str]) -> Self {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(headers).expect("write to memory");
        Self { w }
    }

    pub fn row<I, S>(&mut self, cells: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.w.write_record(cells).expect("write to memory");
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.w.into_inner().expect("flush to memory")
    }

    pub fn save(self, path: &Path) -> Result<()> {
        write_atomic(path, &self.into_bytes())
    }
}

pub(crate) fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

// curve

pub fn read_curve(path: &Path) -> Result<DiscountCurve> {
    let t = Table::read(path)?;
    let m = t.require("maturity_years")?;
    let (col, zero) = match (t.column("discount_factor"), t.column("zero_rate")) {
        (Some(c), None) => (c, false),
        (None, Some(c)) => (c, true),
        (Some(_), Some(_)) => {
            return Err(format_error(path, "columns `discount_factor` and `zero_rate` are mutually exclusive"))
        }
        (None, None) => return Err(format_error(path, "needs a `discount_factor` or `zero_rate` column")),
    };
    let mut pillars = Vec::with_capacity(t.rows.len());
    for (line, cells) in &t.rows {
        pillars.push((t.real(*line, cells, m)?, t.real(*line, cells, col)?));
    }
    if pillars.is_empty() {
        return Err(format_error(path, "curve has no pillars"));
    }
    let built = if zero {
        DiscountCurve::from_zero_rates(&pillars)
    } else {
        DiscountCurve::new(&pillars)
    };
    built.map_err(|e| {
        // pillar errors carry their index; translate to a file line
        let line = match &e {
            g2pp_core::Error::NonMonotoneMaturities { index, .. }
            | g2pp_core::Error::NonPositiveMaturity { index, .. }
            | g2pp_core::Error::DiscountFactorOutOfRange { index, .. } => t.rows[*index].0,
            _ => 0,
        };
        if line == 0 {
            format_error(path, e.to_string())
        } else {
            t.model_error(line, e)
        }
    })
}

pub fn curve_csv(curve: &DiscountCurve) -> CsvOut {
    let mut out = CsvOut::new(&["maturity_years", "discount_factor"]);
    for (t, df) in curve.pillars() {
        out.row([t.to_string(), df.to_string()]);
    }
    out
}

// swaptions

pub fn read_swaptions(path: &Path) -> Result<Vec<SwaptionQuote>> {
    let t = Table::read(path)?;
    let e = t.require("expiry_years")?;
    let n = t.require("tenor_years")?;
    let q = t.require("quote")?;
    let k = t.require("quote_kind")?;
    let strike = t.column("strike");
    let mut out = Vec::with_capacity(t.rows.len());
    for (line, cells) in &t.rows {
        let kind = match t.cell(*line, cells, k)? {
            "price" => QuoteKind::Price,
            "normal_vol" => QuoteKind::NormalVol,
            other => {
                return Err(t.parse_error(*line, format!("quote_kind must be `price` or `normal_vol`, got {other:?}")))
            }
        };
        let mut quote = SwaptionQuote::new(t.real(*line, cells, e)?, t.real(*line, cells, n)?, t.real(*line, cells, q)?, kind)
            .map_err(|err| t.model_error(*line, err))?;
        if let Some(s) = t.optional_real(*line, cells, strike)? {
            quote = quote.with_strike(s);
        }
        out.push(quote);
    }
    if out.is_empty() {
        return Err(format_error(path, "no swaption quotes"));
    }
    Ok(out)
}

pub fn swaptions_csv(quotes: &[SwaptionQuote]) -> CsvOut {
    let mut out = CsvOut::new(&["expiry_years", "tenor_years", "quote", "quote_kind", "strike"]);
    for q in quotes {
        let kind = match q.quote_kind {
            QuoteKind::Price => "price",
            QuoteKind::NormalVol => "normal_vol",
        };
        out.row([q.expiry_years.to_string(), q.tenor_years.to_string(), q.quote.to_string(), kind.to_owned(), opt(q.strike)]);
    }
    out
}

// forecasts

pub fn read_forecasts(path: &Path) -> Result<Vec<RateForecast>> {
    let t = Table::read(path)?;
    let h = t.require("horizon_years")?;
    let m = t.require("maturity_years")?;
    let r = t.require("rate")?;
    t.rows
        .iter()
        .map(|(line, cells)| {
            RateForecast::new(t.real(*line, cells, h)?, t.real(*line, cells, m)?, t.real(*line, cells, r)?)
                .map_err(|e| t.model_error(*line, e))
        })
        .collect()
}

pub fn forecasts_csv(forecasts: &[RateForecast]) -> CsvOut {
    let mut out = CsvOut::new(&["horizon_years", "maturity_years", "rate"]);
    for f in forecasts {
        out.row([f.horizon_years.to_string(), f.maturity_years.to_string(), f.rate.to_string()]);
    }
    out
}

// params

/// Parameters plus the objective they were fitted with, if known.
pub fn read_params(path: &Path) -> Result<(G2Params, Option<f64>)> {
    let t = Table::read(path)?;
    let cols = ["a", "b", "sigma", "eta", "rho"].map(|c| t.require(c));
    let obj = t.column("objective");
    let (line, cells) = match t.rows.as_slice() {
        [row] => row,
        [] => return Err(format_error(path, "no parameter row")),
        _ => return Err(format_error(path, "expected exactly one parameter row")),
    };
    let mut v = [0.0; 5];
    for (slot, col) in v.iter_mut().zip(cols) {
        *slot = t.real(*line, cells, col?)?;
    }
    let p = G2Params::new(v[0], v[1], v[2], v[3], v[4]).map_err(|e| t.model_error(*line, e))?;
    Ok((p, t.optional_real(*line, cells, obj)?))
}

pub fn params_csv(p: &G2Params, objective: Option<f64>) -> CsvOut {
    let mut out = CsvOut::new(&["a", "b", "sigma", "eta", "rho", "objective"]);
    out.row([p.a.to_string(), p.b.to_string(), p.sigma.to_string(), p.eta.to_string(), p.rho.to_string(), opt(objective)]);
    out
}

// premium specs

pub fn read_premium(path: &Path) -> Result<Vec<PremiumSpec>> {
    let t = Table::read(path)?;
    let k = t.require("kind")?;
    let dx = t.require("d_x")?;
    let dy = t.require("d_y")?;
    let lx = t.column("l_x");
    let ly = t.column("l_y");
    let tau = t.column("tau_years");
    let mut out = Vec::with_capacity(t.rows.len());
    for (line, cells) in &t.rows {
        let name = t.cell(*line, cells, k)?;
        let kind = PremiumKind::parse(name)
            .ok_or_else(|| t.parse_error(*line, format!("unknown premium kind {name:?}")))?;
        let (d_x, d_y) = (t.real(*line, cells, dx)?, t.real(*line, cells, dy)?);
        let spec = if kind == PremiumKind::Constant {
            PremiumSpec::constant(d_x, d_y)
        } else {
            let need = |col: Option<usize>, name: &str| {
                t.optional_real(*line, cells, col)?
                    .ok_or_else(|| t.parse_error(*line, format!("{kind} premium needs `{name}`")))
            };
            PremiumSpec::from_levels(kind, d_x, d_y, need(lx, "l_x")?, need(ly, "l_y")?, need(tau, "tau_years")?)
                .map_err(|e| t.model_error(*line, e))?
        };
        out.push(spec);
    }
    if out.is_empty() {
        return Err(format_error(path, "no premium rows"));
    }
    Ok(out)
}

pub fn premium_csv(specs: &[PremiumSpec]) -> CsvOut {
    let mut out = CsvOut::new(&["kind", "d_x", "d_y", "l_x", "l_y", "tau_years"]);
    for s in specs {
        out.row([
            s.kind().name().to_owned(),
            s.d_x().to_string(),
            s.d_y().to_string(),
            opt(s.l_x()),
            opt(s.l_y()),
            opt(s.tau()),
        ]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(text: &str) -> Table {
        Table::parse(Path::new("mem.csv"), text).unwrap()
    }

    #[test]
    fn comments_and_whitespace() {
        let t = table("a, b\n# note\n1, 2\n");
        assert_eq!(t.headers, ["a", "b"]);
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0].0, 3);
        assert_eq!(t.real(3, &t.rows[0].1, 1).unwrap(), 2.0);
    }

    #[test]
    fn bad_number_names_the_row() {
        let t = table("a\n1\nx\n");
        let (line, cells) = &t.rows[1];
        let msg = t.real(*line, cells, 0).unwrap_err().to_string();
        assert!(msg.contains("row 3"), "{msg}");
    }

    #[test]
    fn empty_file_is_rejected() {
        assert!(Table::parse(Path::new("e.csv"), "").is_err());
    }

    #[test]
    fn display_round_trips() {
        for v in [0.1, -0.0029999999999999996, 1e-300, 0.2997, f64::MAX] {
            assert_eq!(v.to_string().parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }
}
