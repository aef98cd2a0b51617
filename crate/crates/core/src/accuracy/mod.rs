//! Accurate-subspace identification.
//!
//! Error bounds split the search space into accurate and inaccurate parts.
//! Because alpha changes accuracy but not cost, the accurate part is kept as a
//! set of (cutoff, grid, order) performance points, each with the interval of
//! alpha values that makes it accurate.
//!
//! The real-space bound is cheap and evaluated everywhere. The reciprocal
//! bound goes through [`ReciprocalErrorModel`]; in split mode only one binary
//! search per (grid, order) cell is needed.

mod frontier;
mod models;

use std::cmp::Ordering;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use frontier::{dominates, extract_frontier, Frontier};
pub use models::{max_spacing, ReciprocalErrorModel, SurrogateModel, TabulatedModel};

use crate::param_space::{GridSize, SearchSpace, SystemDescription, Variant};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AccuracyError {
    #[error("{name} must be positive, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },
    #[error("invalid accuracy threshold: {0}")]
    InvalidThreshold(String),
    #[error("reciprocal error table has no entry for grid {grid}, order {order}, alpha {alpha}")]
    MissingTableEntry { grid: GridSize, order: u32, alpha: f64 },
    #[error("reciprocal error table: {0}")]
    Table(String),
    #[error("{0}")]
    EmptyAccurateSubspace(Box<ClosestMiss>),
}

/// Accuracy target in units of epsilon/sigma.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum AccuracySpec {
    /// Bound on `sqrt(real^2 + recip^2)`.
    Combined {
        #[serde(with = "threshold")]
        threshold: f64,
    },
    /// Independent bounds on each contribution.
    Split {
        #[serde(with = "threshold")]
        real_threshold: f64,
        #[serde(with = "threshold")]
        recip_threshold: f64,
    },
}

impl AccuracySpec {
    /// Thresholds must be non-negative and not NaN. Zero is accepted and
    /// yields an empty subspace; `+inf` disables a bound.
    pub fn validate(&self) -> Result<(), AccuracyError> {
        let values = match *self {
            AccuracySpec::Combined { threshold } => vec![threshold],
            AccuracySpec::Split { real_threshold, recip_threshold } => {
                vec![real_threshold, recip_threshold]
            }
        };
        if values.iter().any(|t| t.is_nan() || *t < 0.0) {
            return Err(AccuracyError::InvalidThreshold(format!("{self:?}")));
        }
        Ok(())
    }

    pub fn accepts(&self, estimate: ErrorEstimate) -> bool {
        match *self {
            AccuracySpec::Combined { threshold } => estimate.combined() <= threshold,
            AccuracySpec::Split { real_threshold, recip_threshold } => {
                estimate.real_err <= real_threshold && estimate.recip_err <= recip_threshold
            }
        }
    }

    /// How far an estimate is from the target, as a multiple of the threshold.
    /// Values `<= 1` are accurate.
    pub fn violation_ratio(&self, estimate: ErrorEstimate) -> f64 {
        match *self {
            AccuracySpec::Combined { threshold } => ratio(estimate.combined(), threshold),
            AccuracySpec::Split { real_threshold, recip_threshold } => ratio(
                estimate.real_err,
                real_threshold,
            )
            .max(ratio(estimate.recip_err, recip_threshold)),
        }
    }
}

fn ratio(err: f64, threshold: f64) -> f64 {
    if err == 0.0 {
        0.0
    } else {
        err / threshold
    }
}

/// Thresholds accept a number or the strings `"inf"` / `"infinity"`.
mod threshold {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &f64, s: S) -> Result<S::Ok, S::Error> {
        if value.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*value)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Number(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Number(v) => Ok(v),
            Raw::Text(t) => match t.to_ascii_lowercase().as_str() {
                "inf" | "infinity" | "+inf" => Ok(f64::INFINITY),
                other => Err(de::Error::custom(format!("invalid threshold `{other}`"))),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorEstimate {
    pub real_err: f64,
    pub recip_err: f64,
}

impl ErrorEstimate {
    pub fn combined(&self) -> f64 {
        self.real_err.hypot(self.recip_err)
    }
}

/// Upper bound on the real-space RMS force error.
///
/// `C sqrt(pi) a^5 / sqrt(N V rc) * (6/(rc a)^6 + 6/(rc a)^4 + 3/(rc a)^2 + 1) * exp(-(rc a)^2)`
/// with `C` the dispersion coefficient, `N` the particle count and `V` the
/// domain volume.
pub fn real_space_error(
    alpha: f64,
    cutoff: f64,
    system: &SystemDescription,
) -> Result<f64, AccuracyError> {
    if !(alpha > 0.0) {
        return Err(AccuracyError::NonPositiveParameter { name: "alpha", value: alpha });
    }
    if !(cutoff > 0.0) {
        return Err(AccuracyError::NonPositiveParameter { name: "cutoff", value: cutoff });
    }
    let n = system.n_particles as f64;
    let x2 = (cutoff * alpha).powi(2);
    let prefactor =
        system.dispersion_coeff * std::f64::consts::PI.sqrt() * alpha.powi(5)
            / (n * system.volume() * cutoff).sqrt();
    let poly = 6.0 / (x2 * x2 * x2) + 6.0 / (x2 * x2) + 3.0 / x2 + 1.0;
    Ok(prefactor * poly * (-x2).exp())
}

/// Index of the largest alpha whose reciprocal error is within `recip_threshold`.
///
/// Binary search over the alpha lattice; `None` when even the smallest alpha
/// fails. Assumes the model is non-decreasing in alpha.
pub fn splitting_alpha<M: ReciprocalErrorModel + ?Sized>(
    grid: GridSize,
    order: u32,
    recip_threshold: f64,
    model: &M,
    space: &SearchSpace,
    variant: Variant,
) -> Result<Option<usize>, AccuracyError> {
    let passes = |i: usize| -> Result<bool, AccuracyError> {
        Ok(model.eval(space.alphas[i], grid, order, &space.system, variant)? <= recip_threshold)
    };
    if space.alphas.is_empty() || !passes(0)? {
        return Ok(None);
    }
    // Invariant: passes(lo) and (hi == len or !passes(hi)).
    let (mut lo, mut hi) = (0, space.alphas.len());
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if passes(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(lo))
}

/// One accurate (cutoff, grid, order) point with its feasible alpha interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerfPoint {
    pub cutoff_index: usize,
    pub cutoff: f64,
    pub grid: GridSize,
    pub order: u32,
    /// First alpha lattice index of the feasible interval.
    pub alpha_lo: usize,
    /// Last alpha lattice index of the feasible interval (inclusive).
    pub alpha_hi: usize,
}

impl PerfPoint {
    /// Midpoint of the alpha interval, rounded down to the lattice.
    pub fn chosen_alpha_index(&self) -> usize {
        (self.alpha_lo + self.alpha_hi) / 2
    }

    pub(crate) fn sort_key(&self) -> (usize, u64, u32, [u32; 3]) {
        (self.cutoff_index, self.grid.points(), self.order, self.grid.dims())
    }
}

/// The accurate part of a search space, projected onto (cutoff, grid, order).
#[derive(Debug, Clone, PartialEq)]
pub struct AccurateSubspace {
    pub space: SearchSpace,
    pub variant: Variant,
    pub spec: AccuracySpec,
    /// Sorted by cutoff, grid points, order.
    pub points: Vec<PerfPoint>,
}

impl AccurateSubspace {
    pub fn alpha(&self, index: usize) -> f64 {
        self.space.alphas[index]
    }

    pub fn alpha_interval(&self, point: &PerfPoint) -> (f64, f64) {
        (self.alpha(point.alpha_lo), self.alpha(point.alpha_hi))
    }

    pub fn chosen_alpha(&self, point: &PerfPoint) -> f64 {
        self.alpha(point.chosen_alpha_index())
    }

    /// Smallest and largest accurate cutoff.
    pub fn cutoff_range(&self) -> Option<(f64, f64)> {
        let lo = self.points.iter().map(|p| p.cutoff_index).min()?;
        let hi = self.points.iter().map(|p| p.cutoff_index).max()?;
        Some((self.space.cutoffs[lo], self.space.cutoffs[hi]))
    }

    pub fn orders(&self) -> Vec<u32> {
        let mut orders: Vec<u32> = self.points.iter().map(|p| p.order).collect();
        orders.sort_unstable();
        orders.dedup();
        orders
    }

    /// Distinct accurate grids for one order, ascending.
    pub fn grids_for_order(&self, order: u32) -> Vec<GridSize> {
        let mut grids: Vec<GridSize> =
            self.points.iter().filter(|p| p.order == order).map(|p| p.grid).collect();
        grids.sort();
        grids.dedup();
        grids
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// The configuration that came closest to the accuracy target when none met it.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosestMiss {
    pub alpha: f64,
    pub cutoff: f64,
    pub grid: GridSize,
    pub order: u32,
    pub estimate: ErrorEstimate,
    pub violation_ratio: f64,
}

impl fmt::Display for ClosestMiss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "empty accurate subspace: no configuration meets the accuracy target; closest is \
             alpha={:.2} cutoff={:.2} order={} grid={} with real_err={:.3e}, recip_err={:.3e} \
             ({:.3e} times the threshold)",
            self.alpha,
            self.cutoff,
            self.order,
            self.grid,
            self.estimate.real_err,
            self.estimate.recip_err,
            self.violation_ratio
        )
    }
}

/// Longest run of `true` in `mask` as inclusive indices; earliest wins ties.
fn longest_run(mask: impl Iterator<Item = bool>) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    let mut start = None;
    let close = |s: usize, e: usize, best: &mut Option<(usize, usize)>| {
        if best.map_or(true, |(bs, be)| e - s > be - bs) {
            *best = Some((s, e));
        }
    };
    let mut last = 0;
    for (i, ok) in mask.enumerate() {
        last = i;
        match (ok, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                close(s, i - 1, &mut best);
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        close(s, last, &mut best);
    }
    best
}

/// Splits `space` into accurate and inaccurate parts and keeps the accurate one.
///
/// A (cutoff, grid, order) point is accurate when at least one alpha on the
/// lattice satisfies `spec`. (grid, order) cells are evaluated in parallel;
/// the result does not depend on scheduling.
pub fn partition_space<M: ReciprocalErrorModel + ?Sized>(
    space: &SearchSpace,
    spec: &AccuracySpec,
    model: &M,
    variant: Variant,
) -> Result<AccurateSubspace, AccuracyError> {
    spec.validate()?;
    let real_errors: Vec<Vec<f64>> = space
        .cutoffs
        .iter()
        .map(|&rc| {
            space
                .alphas
                .iter()
                .map(|&a| real_space_error(a, rc, &space.system))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;
    let real_errors = &real_errors;

    let cells: Vec<(GridSize, u32)> = space
        .grids
        .iter()
        .flat_map(|&g| space.orders.iter().map(move |&p| (g, p)))
        .collect();

    let per_cell: Vec<Vec<PerfPoint>> = cells
        .par_iter()
        .map(|&(grid, order)| {
            let allowed: Box<dyn Fn(usize, usize) -> bool + '_> = match *spec {
                AccuracySpec::Split { real_threshold, recip_threshold } => {
                    let split =
                        splitting_alpha(grid, order, recip_threshold, model, space, variant)?;
                    let Some(split) = split else {
                        return Ok(Vec::new());
                    };
                    Box::new(move |c: usize, i: usize| {
                        i <= split && real_errors[c][i] <= real_threshold
                    })
                }
                AccuracySpec::Combined { threshold } => {
                    let recip = recip_column(space, model, grid, order, variant)?;
                    Box::new(move |c: usize, i: usize| {
                        real_errors[c][i].hypot(recip[i]) <= threshold
                    })
                }
            };
            let points = (0..space.cutoffs.len())
                .filter_map(|c| {
                    longest_run((0..space.alphas.len()).map(|i| allowed(c, i))).map(|(lo, hi)| {
                        PerfPoint {
                            cutoff_index: c,
                            cutoff: space.cutoffs[c],
                            grid,
                            order,
                            alpha_lo: lo,
                            alpha_hi: hi,
                        }
                    })
                })
                .collect();
            Ok(points)
        })
        .collect::<Result<_, AccuracyError>>()?;

    let mut points: Vec<PerfPoint> = per_cell.into_iter().flatten().collect();
    if points.is_empty() {
        let miss = closest_miss(space, spec, model, variant, real_errors)?;
        return Err(AccuracyError::EmptyAccurateSubspace(Box::new(miss)));
    }
    points.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    Ok(AccurateSubspace { space: space.clone(), variant, spec: *spec, points })
}

fn recip_column<M: ReciprocalErrorModel + ?Sized>(
    space: &SearchSpace,
    model: &M,
    grid: GridSize,
    order: u32,
    variant: Variant,
) -> Result<Vec<f64>, AccuracyError> {
    space
        .alphas
        .iter()
        .map(|&a| model.eval(a, grid, order, &space.system, variant))
        .collect()
}

fn closest_miss<M: ReciprocalErrorModel + ?Sized>(
    space: &SearchSpace,
    spec: &AccuracySpec,
    model: &M,
    variant: Variant,
    real_errors: &[Vec<f64>],
) -> Result<ClosestMiss, AccuracyError> {
    let mut best: Option<ClosestMiss> = None;
    for &grid in &space.grids {
        for &order in &space.orders {
            let recip = recip_column(space, model, grid, order, variant)?;
            for (c, real_row) in real_errors.iter().enumerate() {
                for (i, (&real_err, &recip_err)) in real_row.iter().zip(&recip).enumerate() {
                    let estimate = ErrorEstimate { real_err, recip_err };
                    let r = spec.violation_ratio(estimate);
                    let better = best
                        .as_ref()
                        .map_or(true, |b| r.total_cmp(&b.violation_ratio) == Ordering::Less);
                    if better {
                        best = Some(ClosestMiss {
                            alpha: space.alphas[i],
                            cutoff: space.cutoffs[c],
                            grid,
                            order,
                            estimate,
                            violation_ratio: r,
                        });
                    }
                }
            }
        }
    }
    best.ok_or_else(|| AccuracyError::InvalidThreshold("search space is empty".into()))
}
