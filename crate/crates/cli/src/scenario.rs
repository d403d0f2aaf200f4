//! Scenario export.
//!
//! CSV: one row per path and grid time, `path,time,x,y,short_rate`.
//!
//! Binary, all little-endian:
//!
//! | offset | size | field |
//! |---|---|---|
//! | 0 | 8 | magic `G2PPSCN1` |
//! | 8 | 8 | `n_paths` (u64) |
//! | 16 | 8 | `n_times` (u64) |
//! | 24 | 8 | seed (u64) |
//! | 32 | 8 | step in years (f64) |
//! | 40 | 8 | horizon in years (f64) |
//! | 48 | 1 | measure, 0 = Q, 1 = P |
//! | 49 | 1 | antithetic flag |
//! | 50 | 6 | zero padding |
//! | 56 | 8·n_times | grid times (f64) |
//!
//! followed by, for each path, `x` then `y` over the grid (f64). The short
//! rate is not stored; it needs the curve and is rebuilt on read.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use g2pp_core::model::phi;
use g2pp_core::simulate::PathGenerator;
use g2pp_core::{DiscountCurve, G2Params, Measure, ScenarioSet, SimConfig};
use rayon::prelude::*;

use crate::error::{CliError, Result};
use crate::io::tmp_path;

pub const MAGIC: [u8; 8] = *b"G2PPSCN1";
pub const HEADER_LEN: usize = 56;
const CHUNK: usize = 2048;

/// Streams every path of `gen` to the requested files. Paths are generated
/// in parallel chunks and written in index order.
pub fn export(
    gen: &PathGenerator,
    curve: &DiscountCurve,
    p: &G2Params,
    csv_path: Option<&Path>,
    bin_path: Option<&Path>,
) -> Result<()> {
    let times = gen.times();
    let n = times.len();
    let cfg = gen.config();
    let phis: Vec<f64> = if csv_path.is_some() {
        times
            .iter()
            .map(|&t| phi(curve, p, t))
            .collect::<g2pp_core::Result<_>>()
            .map_err(CliError::model("short-rate shift on the simulation grid"))?
    } else {
        Vec::new()
    };

    let mut csv_out = csv_path.map(Sink::create).transpose()?;
    let mut bin_out = bin_path.map(Sink::create).transpose()?;
    if let Some(s) = csv_out.as_mut() {
        s.write(b"path,time,x,y,short_rate\n")?;
    }
    if let Some(s) = bin_out.as_mut() {
        s.write(&header(cfg, n))?;
        for t in times {
            s.write(&t.to_le_bytes())?;
        }
    }

    let mut line = String::new();
    for start in (0..cfg.n_paths).step_by(CHUNK) {
        let end = (start + CHUNK).min(cfg.n_paths);
        let paths: Vec<(Vec<f64>, Vec<f64>)> = (start..end)
            .into_par_iter()
            .map(|i| {
                let mut x = vec![0.0; n];
                let mut y = vec![0.0; n];
                gen.fill_path(i, &mut x, &mut y);
                (x, y)
            })
            .collect();
        for (off, (x, y)) in paths.iter().enumerate() {
            let i = start + off;
            if let Some(s) = csv_out.as_mut() {
                for k in 0..n {
                    use std::fmt::Write as _;
                    line.clear();
                    let _ = writeln!(line, "{i},{},{},{},{}", times[k], x[k], y[k], x[k] + y[k] + phis[k]);
                    s.write(line.as_bytes())?;
                }
            }
            if let Some(s) = bin_out.as_mut() {
                for v in x.iter().chain(y) {
                    s.write(&v.to_le_bytes())?;
                }
            }
        }
    }
    if let Some(s) = csv_out {
        s.commit()?;
    }
    if let Some(s) = bin_out {
        s.commit()?;
    }
    Ok(())
}

fn header(cfg: &SimConfig, n_times: usize) -> [u8; HEADER_LEN] {
    let mut h = [0u8; HEADER_LEN];
    h[0..8].copy_from_slice(&MAGIC);
    h[8..16].copy_from_slice(&(cfg.n_paths as u64).to_le_bytes());
    h[16..24].copy_from_slice(&(n_times as u64).to_le_bytes());
    h[24..32].copy_from_slice(&cfg.seed.to_le_bytes());
    h[32..40].copy_from_slice(&cfg.step_years.to_le_bytes());
    h[40..48].copy_from_slice(&cfg.horizon_years.to_le_bytes());
    h[48] = match cfg.measure {
        Measure::Q => 0,
        Measure::P => 1,
    };
    h[49] = u8::from(cfg.antithetic);
    h
}

/// Buffered writer to a temp file that is renamed into place on commit.
struct Sink<'a> {
    path: &'a Path,
    tmp: std::path::PathBuf,
    w: BufWriter<File>,
}

impl<'a> Sink<'a> {
    fn create(path: &'a Path) -> Result<Self> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        let tmp = tmp_path(path);
        let f = File::create(&tmp).map_err(|e| CliError::io(&tmp, e))?;
        Ok(Self {
            path,
            w: BufWriter::with_capacity(1 << 20, f),
            tmp,
        })
    }

    fn write(&mut self, bytes: &[u8]) -> Result<()> {
        self.w.write_all(bytes).map_err(|e| CliError::io(&self.tmp, e))
    }

    fn commit(self) -> Result<()> {
        let f = self.w.into_inner().map_err(|e| CliError::io(&self.tmp, e.into_error()))?;
        f.sync_all().map_err(|e| CliError::io(&self.tmp, e))?;
        std::fs::rename(&self.tmp, self.path).map_err(|e| CliError::io(self.path, e))
    }
}

/// Reads a binary scenario file back into memory.
pub fn read_binary(path: &Path) -> Result<ScenarioSet> {
    let bad = |message: String| CliError::Format {
        path: path.to_path_buf(),
        message,
    };
    let mut f = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut h = [0u8; HEADER_LEN];
    f.read_exact(&mut h).map_err(|_| bad("truncated header".into()))?;
    if h[0..8] != MAGIC {
        return Err(bad("not a scenario file (bad magic)".into()));
    }
    let u64_at = |o: usize| u64::from_le_bytes(h[o..o + 8].try_into().expect("8 bytes"));
    let f64_at = |o: usize| f64::from_le_bytes(h[o..o + 8].try_into().expect("8 bytes"));
    let n_paths = usize::try_from(u64_at(8)).map_err(|_| bad("path count too large".into()))?;
    let n_times = usize::try_from(u64_at(16)).map_err(|_| bad("time count too large".into()))?;
    let config = SimConfig {
        n_paths,
        step_years: f64_at(32),
        horizon_years: f64_at(40),
        measure: match h[48] {
            0 => Measure::Q,
            1 => Measure::P,
            m => return Err(bad(format!("unknown measure tag {m}"))),
        },
        seed: u64_at(24),
        antithetic: h[49] != 0,
    };
    let total = n_paths
        .checked_mul(n_times)
        .ok_or_else(|| bad("dimensions overflow".into()))?;
    let mut body = Vec::new();
    f.read_to_end(&mut body).map_err(|e| CliError::io(path, e))?;
    if body.len() != 8 * (n_times + 2 * total) {
        return Err(bad(format!(
            "body holds {} bytes, header implies {}",
            body.len(),
            8 * (n_times + 2 * total)
        )));
    }
    let mut vals = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
    let times: Vec<f64> = vals.by_ref().take(n_times).collect();
    let mut x = Vec::with_capacity(total);
    let mut y = Vec::with_capacity(total);
    for _ in 0..n_paths {
        x.extend(vals.by_ref().take(n_times));
        y.extend(vals.by_ref().take(n_times));
    }
    let set = ScenarioSet { config, times, x, y };
    set.validate().map_err(|e| bad(e.to_string()))?;
    Ok(set)
}
