//! Report files: `report.json`, `frontier.csv`, `subspace.csv` and the
//! samples CSV.
//!
//! Floats are rounded to six significant digits and printed in shortest
//! round-trip form, and JSON keys are sorted, so identical runs give
//! byte-identical files.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::accuracy::{AccurateSubspace, Frontier};
use crate::param_space::{Configuration, GridSize, Variant};
use crate::sampling::{Phase, SampleRecord};

pub const SAMPLES_HEADER: &str = "alpha,cutoff,order,nx,ny,nz,phase,seconds";
pub const FRONTIER_HEADER: &str = "rank,predicted_seconds,alpha,cutoff,order,nx,ny,nz,extrapolated";
pub const SUBSPACE_HEADER: &str = "cutoff,nx,ny,nz,order,alpha_lo,alpha_hi,on_frontier";

/// `x` rounded to six significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.5e}").parse().unwrap_or(x)
}

/// Shortest round-trip text of [`round_sig`]`(x)`.
///
/// ```
/// use paretune::report::fmt_float;
/// assert_eq!(fmt_float(2.0 + 26.0 * 0.1), "4.6");
/// assert_eq!(fmt_float(9.2201234567), "9.22012");
/// ```
pub fn fmt_float(x: f64) -> String {
    format!("{}", round_sig(x))
}

fn round_value(value: &mut Value) {
    match value {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().map(round_sig).and_then(serde_json::Number::from_f64) {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON with sorted keys and floats rounded by [`round_sig`].
pub fn canonical_json<T: Serialize>(value: &T) -> String {
    let mut v = serde_json::to_value(value).expect("report values serialize");
    round_value(&mut v);
    let mut text = serde_json::to_string_pretty(&v).expect("json values serialize");
    text.push('\n');
    text
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChosenConfig {
    pub alpha: f64,
    pub cutoff: f64,
    pub order: u32,
    pub grid: GridSize,
}

impl From<&Configuration> for ChosenConfig {
    fn from(c: &Configuration) -> Self {
        ChosenConfig { alpha: c.alpha, cutoff: c.cutoff, order: c.order, grid: c.grid }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierEntry {
    pub rank: usize,
    pub predicted_seconds: f64,
    pub alpha: f64,
    pub alpha_interval: [f64; 2],
    pub cutoff: f64,
    pub order: u32,
    pub grid: GridSize,
    pub extrapolated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    pub config: ChosenConfig,
    pub predicted_seconds: Option<f64>,
    /// Measured baseline time, when a sampler was available.
    pub empirical_seconds: Option<f64>,
    /// Measured time of the chosen configuration under the same protocol.
    pub chosen_empirical_seconds: Option<f64>,
    /// Baseline time over chosen time; measured when possible, else predicted.
    pub speedup: Option<f64>,
}

/// Results for one solver variant. `frontier` is ranked, so its first entry
/// is the chosen configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantReport {
    pub variant: Variant,
    pub chosen: ChosenConfig,
    pub predicted_seconds: f64,
    pub alpha_interval: [f64; 2],
    pub frontier: Vec<FrontierEntry>,
    /// Sampler invocations, or sample rows used when predicting from a file.
    pub samples_used: usize,
    /// Target-code seconds spent on measurements.
    pub wall_time_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<BaselineReport>,
}

impl VariantReport {
    pub fn to_json(&self) -> String {
        canonical_json(self)
    }

    pub fn frontier_csv(&self) -> String {
        let mut out = String::from(FRONTIER_HEADER);
        out.push('\n');
        for e in &self.frontier {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                e.rank,
                fmt_float(e.predicted_seconds),
                fmt_float(e.alpha),
                fmt_float(e.cutoff),
                e.order,
                e.grid.nx,
                e.grid.ny,
                e.grid.nz,
                e.extrapolated
            );
        }
        out
    }
}

/// Every accurate point with its alpha interval, flagged when on the frontier.
pub fn subspace_csv(sub: &AccurateSubspace, frontier: &Frontier) -> String {
    let on_frontier: BTreeSet<_> = frontier.points.iter().map(|p| p.sort_key()).collect();
    let mut out = String::from(SUBSPACE_HEADER);
    out.push('\n');
    for p in &sub.points {
        let (lo, hi) = sub.alpha_interval(p);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            fmt_float(p.cutoff),
            p.grid.nx,
            p.grid.ny,
            p.grid.nz,
            p.order,
            fmt_float(lo),
            fmt_float(hi),
            on_frontier.contains(&p.sort_key())
        );
    }
    out
}

/// One row of a samples CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub alpha: f64,
    pub cutoff: f64,
    pub order: u32,
    pub nx: u32,
    pub ny: u32,
    pub nz: u32,
    pub phase: Phase,
    pub seconds: f64,
}

impl SampleRow {
    pub fn grid(&self) -> GridSize {
        GridSize::new(self.nx, self.ny, self.nz)
    }
}

impl From<&SampleRecord> for SampleRow {
    fn from(r: &SampleRecord) -> Self {
        SampleRow {
            alpha: r.config.alpha,
            cutoff: r.config.cutoff,
            order: r.config.order,
            nx: r.config.grid.nx,
            ny: r.config.grid.ny,
            nz: r.config.grid.nz,
            phase: r.phase,
            seconds: r.seconds,
        }
    }
}

/// Samples CSV; seconds keep full precision so models refit exactly.
pub fn samples_csv(records: &[SampleRecord]) -> String {
    let mut out = String::from(SAMPLES_HEADER);
    out.push('\n');
    for r in records.iter().map(SampleRow::from) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            fmt_float(r.alpha),
            fmt_float(r.cutoff),
            r.order,
            r.nx,
            r.ny,
            r.nz,
            r.phase,
            r.seconds
        );
    }
    out
}

pub fn read_samples_csv<R: Read>(reader: R) -> Result<Vec<SampleRow>, String> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(|e| e.to_string())?.clone();
    let expected: Vec<&str> = SAMPLES_HEADER.split(',').collect();
    if !header.is_empty() && header.iter().collect::<Vec<_>>() != expected {
        return Err(format!("expected header `{SAMPLES_HEADER}`"));
    }
    let mut rows = Vec::new();
    for (i, row) in rdr.deserialize::<SampleRow>().enumerate() {
        let row = row.map_err(|e| format!("row {}: {e}", i + 2))?;
        if !(row.seconds.is_finite() && row.seconds > 0.0) {
            return Err(format!("row {}: seconds must be positive", i + 2));
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn read_samples_file(path: &Path) -> Result<Vec<SampleRow>, String> {
    let file = std::fs::File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
    read_samples_csv(file).map_err(|e| format!("{}: {e}", path.display()))
}

/// `base.ext`, or `base_<variant>.ext` when several variants share a directory.
pub fn output_name(base: &str, ext: &str, variant: Variant, multi: bool) -> String {
    if multi {
        format!("{base}_{variant}.{ext}")
    } else {
        format!("{base}.{ext}")
    }
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Writes every `(file name, contents)` pair into `dir`.
pub fn write_files(dir: &Path, files: &[(String, String)]) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    files
        .iter()
        .map(|(name, contents)| {
            let path = dir.join(name);
            write_atomic(&path, contents).map(|_| path)
        })
        .collect()
}
