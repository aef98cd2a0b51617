//! Empirical cost models and frontier ranking.
//!
//! Total time is modeled as the sum of a real-space term, cubic in the cutoff,
//! and a reciprocal-space term, linear in the grid point count with one model
//! per interpolation order. The reciprocal term is sampled at the smallest and
//! largest accurate cutoff and linearly interpolated in between.

mod fit;
mod segment;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use fit::{fit_basis, fit_cubic, fit_linear, Basis, CostFit, CubicFit, LinearFit};
pub use segment::{segment_series, PiecewiseModel, Segment};

use crate::accuracy::{AccurateSubspace, Frontier};
use crate::param_space::GridSize;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("fit needs at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("degenerate fit: all sample positions are equal")]
    DegenerateFit,
    #[error("no reciprocal-space model for interpolation order {0}")]
    UncoveredOrder(u32),
    #[error("predictions ({predicted}) and measurements ({empirical}) differ in length")]
    LengthMismatch { predicted: usize, empirical: usize },
    #[error("predicted time {seconds} s for cutoff {cutoff}, grid {grid}, order {order} is not positive")]
    NonPositivePrediction { cutoff: f64, grid: GridSize, order: u32, seconds: f64 },
}

/// Reciprocal-space models of one order at the two sampled cutoff levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecipLevels {
    pub at_rc_min: PiecewiseModel,
    pub at_rc_max: PiecewiseModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerfModel {
    pub real_model: PiecewiseModel,
    pub recip_models: BTreeMap<u32, RecipLevels>,
    pub rc_min: f64,
    pub rc_max: f64,
    pub n_procs: u32,
}

/// Predicted seconds plus whether any term left its sampled range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub seconds: f64,
    pub extrapolated: bool,
}

impl PerfModel {
    /// Weight of the `rc_max` level for a cutoff, clamped to `[0, 1]`.
    fn level_weight(&self, cutoff: f64) -> f64 {
        if self.rc_max > self.rc_min {
            ((cutoff - self.rc_min) / (self.rc_max - self.rc_min)).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }

    pub fn estimate(&self, cutoff: f64, grid: GridSize, order: u32) -> Result<Estimate, ModelError> {
        let levels = self.recip_models.get(&order).ok_or(ModelError::UncoveredOrder(order))?;
        let g = grid.points() as f64;
        let w = self.level_weight(cutoff);
        let lo = levels.at_rc_min.eval(g);
        let hi = levels.at_rc_max.eval(g);
        let seconds = self.real_model.eval(cutoff) + lo + w * (hi - lo);
        if !(seconds > 0.0) {
            return Err(ModelError::NonPositivePrediction { cutoff, grid, order, seconds });
        }
        let extrapolated = !self.real_model.covers(cutoff)
            || !levels.at_rc_min.covers(g)
            || !levels.at_rc_max.covers(g);
        Ok(Estimate { seconds, extrapolated })
    }
}

/// Predicted total seconds for a (cutoff, grid, order) point.
pub fn predict(cutoff: f64, grid: GridSize, order: u32, model: &PerfModel) -> Result<f64, ModelError> {
    model.estimate(cutoff, grid, order).map(|e| e.seconds)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub cutoff: f64,
    pub grid: GridSize,
    pub order: u32,
    pub chosen_alpha: f64,
    pub alpha_interval: (f64, f64),
    pub est_seconds: f64,
    pub extrapolated: bool,
}

/// Frontier points by ascending predicted time.
///
/// Ties go to fewer grid points, then lower order, then smaller cutoff.
pub fn rank_frontier(
    frontier: &Frontier,
    sub: &AccurateSubspace,
    model: &PerfModel,
) -> Result<Vec<Prediction>, ModelError> {
    let mut ranked = frontier
        .points
        .iter()
        .map(|p| {
            let e = model.estimate(p.cutoff, p.grid, p.order)?;
            Ok(Prediction {
                cutoff: p.cutoff,
                grid: p.grid,
                order: p.order,
                chosen_alpha: sub.chosen_alpha(p),
                alpha_interval: sub.alpha_interval(p),
                est_seconds: e.seconds,
                extrapolated: e.extrapolated,
            })
        })
        .collect::<Result<Vec<_>, ModelError>>()?;
    ranked.sort_by(|a, b| {
        a.est_seconds
            .total_cmp(&b.est_seconds)
            .then(a.grid.points().cmp(&b.grid.points()))
            .then(a.order.cmp(&b.order))
            .then(a.cutoff.total_cmp(&b.cutoff))
            .then(a.grid.dims().cmp(&b.grid.dims()))
    });
    Ok(ranked)
}

/// Mean of `|t_pred - t_emp| / t_pred`.
pub fn avg_relative_error(predicted: &[f64], empirical: &[f64]) -> Result<f64, ModelError> {
    if predicted.len() != empirical.len() || predicted.is_empty() {
        return Err(ModelError::LengthMismatch {
            predicted: predicted.len(),
            empirical: empirical.len(),
        });
    }
    let sum: f64 = predicted.iter().zip(empirical).map(|(p, e)| (p - e).abs() / p).sum();
    Ok(sum / predicted.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(basis: Basis, intercept: f64, slope: f64, lo: f64, hi: f64) -> PiecewiseModel {
        PiecewiseModel::single(CostFit { basis, intercept, slope }, lo, hi)
    }

    fn model(recip_lo: f64, recip_hi: f64) -> PerfModel {
        let mut recip_models = BTreeMap::new();
        recip_models.insert(
            4,
            RecipLevels {
                at_rc_min: flat(Basis::Linear, recip_lo, 1e-4, 1000.0, 50_000.0),
                at_rc_max: flat(Basis::Linear, recip_hi, 1e-4, 1000.0, 50_000.0),
            },
        );
        PerfModel {
            real_model: flat(Basis::Cubic, 0.44, 0.0565, 4.0, 6.0),
            recip_models,
            rc_min: 4.0,
            rc_max: 6.0,
            n_procs: 8,
        }
    }

    #[test]
    fn equal_levels_make_recip_term_cutoff_independent() {
        let m = model(2.0, 2.0);
        let g = GridSize::new(10, 10, 160);
        let a = predict(4.0, g, 4, &m).unwrap() - m.real_model.eval(4.0);
        let b = predict(5.3, g, 4, &m).unwrap() - m.real_model.eval(5.3);
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn midpoint_cutoff_averages_levels() {
        let m = model(2.0, 3.0);
        let g = GridSize::new(10, 10, 160);
        let recip = predict(5.0, g, 4, &m).unwrap() - m.real_model.eval(5.0);
        assert!((recip - (2.5 + 1.6)).abs() < 1e-12);
    }

    #[test]
    fn cutoff_is_clamped_for_the_recip_term() {
        let m = model(2.0, 3.0);
        let g = GridSize::new(10, 10, 160);
        let e = m.estimate(7.0, g, 4).unwrap();
        assert!((e.seconds - m.real_model.eval(7.0) - 4.6).abs() < 1e-12);
        assert!(e.extrapolated);
        assert!(!m.estimate(5.0, g, 4).unwrap().extrapolated);
    }

    #[test]
    fn unknown_order_is_reported() {
        let m = model(2.0, 3.0);
        assert_eq!(
            predict(5.0, GridSize::new(8, 8, 8), 6, &m),
            Err(ModelError::UncoveredOrder(6))
        );
    }

    #[test]
    fn relative_error_of_published_rows() {
        let e = avg_relative_error(&[8.378], &[8.770]).unwrap();
        assert!((e * 100.0 - 4.68).abs() < 0.005);
        let e = avg_relative_error(&[7.413], &[7.498]).unwrap();
        assert!((e * 100.0 - 1.15).abs() < 0.005);
        assert_eq!(avg_relative_error(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!(matches!(
            avg_relative_error(&[1.0], &[1.0, 2.0]),
            Err(ModelError::LengthMismatch { .. })
        ));
    }
}
