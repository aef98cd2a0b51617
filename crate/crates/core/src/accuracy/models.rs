//! Reciprocal-space error models.
//!
//! The exact reciprocal-space bound is expensive and solver specific, so the
//! partitioning code only talks to [`ReciprocalErrorModel`]. Two models ship
//! with the crate: an analytic surrogate for desk-scale work and a lookup
//! table for errors computed by an external evaluator.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use serde::Deserialize;

use super::AccuracyError;
use crate::param_space::{GridSize, SystemDescription, Variant};

/// Reciprocal-space error as a function of (alpha, grid, order).
///
/// Implementations must be non-decreasing in `alpha` and non-increasing in
/// `order` and in each grid dimension. The splitting-alpha binary search relies
/// on the first property.
pub trait ReciprocalErrorModel: Send + Sync {
    fn eval(
        &self,
        alpha: f64,
        grid: GridSize,
        order: u32,
        system: &SystemDescription,
        variant: Variant,
    ) -> Result<f64, AccuracyError>;
}

impl<M: ReciprocalErrorModel + ?Sized> ReciprocalErrorModel for &M {
    fn eval(
        &self,
        alpha: f64,
        grid: GridSize,
        order: u32,
        system: &SystemDescription,
        variant: Variant,
    ) -> Result<f64, AccuracyError> {
        (**self).eval(alpha, grid, order, system, variant)
    }
}

impl<M: ReciprocalErrorModel + ?Sized> ReciprocalErrorModel for Box<M> {
    fn eval(
        &self,
        alpha: f64,
        grid: GridSize,
        order: u32,
        system: &SystemDescription,
        variant: Variant,
    ) -> Result<f64, AccuracyError> {
        (**self).eval(alpha, grid, order, system, variant)
    }
}

/// Largest mesh spacing over the three axes.
pub fn max_spacing(grid: GridSize, system: &SystemDescription) -> f64 {
    system
        .domain()
        .iter()
        .zip(grid.dims())
        .map(|(len, n)| len / f64::from(n))
        .fold(0.0, f64::max)
}

/// `ck * alpha * (alpha * h_max)^order`.
///
/// Monotone by construction. Not a physical error bound; `ck` calibrates it
/// against whatever reference the user trusts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurrogateModel {
    pub ck: f64,
}

impl SurrogateModel {
    pub fn new(ck: f64) -> Self {
        SurrogateModel { ck }
    }

    pub fn error(&self, alpha: f64, grid: GridSize, order: u32, system: &SystemDescription) -> f64 {
        let h = max_spacing(grid, system);
        self.ck * alpha * (alpha * h).powi(order as i32)
    }
}

impl ReciprocalErrorModel for SurrogateModel {
    fn eval(
        &self,
        alpha: f64,
        grid: GridSize,
        order: u32,
        system: &SystemDescription,
        _variant: Variant,
    ) -> Result<f64, AccuracyError> {
        if alpha <= 0.0 {
            return Err(AccuracyError::NonPositiveParameter { name: "alpha", value: alpha });
        }
        Ok(self.error(alpha, grid, order, system))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct TableKey {
    grid: GridSize,
    order: u32,
    alpha_micro: i64,
}

fn alpha_key(alpha: f64) -> i64 {
    (alpha * 1e6).round() as i64
}

#[derive(Debug, Deserialize)]
struct TableRow {
    nx: u32,
    ny: u32,
    nz: u32,
    order: u32,
    alpha: f64,
    recip_err: f64,
}

/// Reciprocal errors read from a CSV with header `nx,ny,nz,order,alpha,recip_err`.
///
/// Lookups are exact on lattice points (alpha matched to 1e-6). Missing
/// entries are errors, never interpolated.
#[derive(Debug, Clone, Default)]
pub struct TabulatedModel {
    entries: HashMap<TableKey, f64>,
}

impl TabulatedModel {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, AccuracyError> {
        let path = path.as_ref();
        let file = std::fs::File::open(path)
            .map_err(|e| AccuracyError::Table(format!("{}: {e}", path.display())))?;
        Self::from_reader(file)
    }

    pub fn from_reader(reader: impl Read) -> Result<Self, AccuracyError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(|e| AccuracyError::Table(e.to_string()))?.clone();
        let expected = ["nx", "ny", "nz", "order", "alpha", "recip_err"];
        if headers.iter().ne(expected.iter().copied()) {
            return Err(AccuracyError::Table(format!(
                "expected header `{}`, found `{}`",
                expected.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut entries = HashMap::new();
        for row in rdr.deserialize() {
            let row: TableRow = row.map_err(|e| AccuracyError::Table(e.to_string()))?;
            if !(row.recip_err.is_finite() && row.recip_err >= 0.0) {
                return Err(AccuracyError::Table(format!(
                    "recip_err must be finite and non-negative, got {}",
                    row.recip_err
                )));
            }
            let key = TableKey {
                grid: GridSize::new(row.nx, row.ny, row.nz),
                order: row.order,
                alpha_micro: alpha_key(row.alpha),
            };
            entries.insert(key, row.recip_err);
        }
        Ok(TabulatedModel { entries })
    }

    pub fn insert(&mut self, grid: GridSize, order: u32, alpha: f64, recip_err: f64) {
        let key = TableKey { grid, order, alpha_micro: alpha_key(alpha) };
        self.entries.insert(key, recip_err);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl ReciprocalErrorModel for TabulatedModel {
    fn eval(
        &self,
        alpha: f64,
        grid: GridSize,
        order: u32,
        _system: &SystemDescription,
        _variant: Variant,
    ) -> Result<f64, AccuracyError> {
        let key = TableKey { grid, order, alpha_micro: alpha_key(alpha) };
        self.entries
            .get(&key)
            .copied()
            .ok_or(AccuracyError::MissingTableEntry { grid, order, alpha })
    }
}
