//! Top-down segmentation of sampled cost series.
//!
//! Some solvers switch their FFT decomposition at a grid size that depends on
//! the process count, which shifts the reciprocal-space cost onto a parallel
//! line. A single fit cannot follow that, so samples are split recursively
//! into contiguous segments with one fit each.

use serde::{Deserialize, Serialize};

use super::fit::{fit_basis, Basis, CostFit};
use super::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    /// First sampled position covered by the segment.
    pub start: f64,
    /// Last sampled position covered by the segment.
    pub end: f64,
    pub fit: CostFit,
}

/// Contiguous, non-overlapping fits over a sampled range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseModel {
    pub basis: Basis,
    /// Ordered by `start`; never empty.
    pub segments: Vec<Segment>,
}

impl PiecewiseModel {
    pub fn single(fit: CostFit, start: f64, end: f64) -> Self {
        PiecewiseModel { basis: fit.basis, segments: vec![Segment { start, end, fit }] }
    }

    /// A flat model through one sample, for ranges with a single position.
    pub fn constant(basis: Basis, x: f64, seconds: f64) -> Self {
        Self::single(CostFit { basis, intercept: seconds, slope: 0.0 }, x, x)
    }

    /// Positions where a new segment starts.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.segments.iter().skip(1).map(|s| s.start).collect()
    }

    /// Segment `k` owns `[start_k, start_{k+1})`; the first and last segments
    /// extend to cover extrapolation.
    pub fn segment_for(&self, x: f64) -> &Segment {
        self.segments
            .iter()
            .rev()
            .find(|s| s.start <= x)
            .unwrap_or(&self.segments[0])
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.segment_for(x).fit.eval(x)
    }

    /// Sampled range `[first start, last end]`.
    pub fn range(&self) -> (f64, f64) {
        (self.segments[0].start, self.segments[self.segments.len() - 1].end)
    }

    pub fn covers(&self, x: f64) -> bool {
        let (lo, hi) = self.range();
        x >= lo && x <= hi
    }
}

/// Splits `points` until each segment's mean relative error is at most
/// `max_avg_rel_err`.
///
/// Each step picks the split minimizing the summed squared relative residuals
/// of the two halves. Segments keep at least two points, so a segment with
/// fewer than four points is never split.
pub fn segment_series(
    points: &[(f64, f64)],
    basis: Basis,
    max_avg_rel_err: f64,
) -> Result<PiecewiseModel, ModelError> {
    if points.len() < 2 {
        return Err(ModelError::TooFewPoints { needed: 2, got: points.len() });
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut segments = Vec::new();
    split(&sorted, basis, max_avg_rel_err, &mut segments)?;
    Ok(PiecewiseModel { basis, segments })
}

fn split(
    points: &[(f64, f64)],
    basis: Basis,
    max_avg_rel_err: f64,
    out: &mut Vec<Segment>,
) -> Result<(), ModelError> {
    let fit = fit_basis(points, basis)?;
    let done = fit.mean_relative_error(points) <= max_avg_rel_err || points.len() < 4;
    if done {
        out.push(Segment { start: points[0].0, end: points[points.len() - 1].0, fit });
        return Ok(());
    }
    let mut best: Option<(usize, f64)> = None;
    for s in 2..=points.len() - 2 {
        let cost = fit_basis(&points[..s], basis)?.relative_sse(&points[..s])
            + fit_basis(&points[s..], basis)?.relative_sse(&points[s..]);
        if best.map_or(true, |(_, c)| cost < c) {
            best = Some((s, cost));
        }
    }
    let (s, _) = best.expect("at least one split candidate");
    split(&points[..s], basis, max_avg_rel_err, out)?;
    split(&points[s..], basis, max_avg_rel_err, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_line_is_one_segment() {
        let pts: Vec<_> = (1..10).map(|i| (i as f64, 1.0 + 0.5 * i as f64)).collect();
        let m = segment_series(&pts, Basis::Linear, 0.0).unwrap();
        assert_eq!(m.segments.len(), 1);
        assert!(m.breakpoints().is_empty());
    }

    #[test]
    fn unbounded_tolerance_never_splits() {
        let pts = [(1.0, 1.0), (2.0, 9.0), (3.0, 2.0), (4.0, 7.0), (5.0, 1.0)];
        let m = segment_series(&pts, Basis::Linear, f64::INFINITY).unwrap();
        assert_eq!(m.segments.len(), 1);
    }

    #[test]
    fn zero_tolerance_splits_down_to_small_segments() {
        let pts: Vec<_> = (0..11).map(|i| (i as f64, 1.0 + ((i * 7) % 5) as f64)).collect();
        let m = segment_series(&pts, Basis::Linear, 0.0).unwrap();
        assert!(m.segments.len() >= 4);
        let mut covered = 0;
        for s in &m.segments {
            let n = pts.iter().filter(|p| p.0 >= s.start && p.0 <= s.end).count();
            assert!((2..=3).contains(&n));
            covered += n;
        }
        assert_eq!(covered, pts.len());
    }

    #[test]
    fn piecewise_eval_uses_owning_segment() {
        let left = CostFit { basis: Basis::Linear, intercept: 1.0, slope: 1.0 };
        let right = CostFit { basis: Basis::Linear, intercept: 2.0, slope: 1.0 };
        let m = PiecewiseModel {
            basis: Basis::Linear,
            segments: vec![
                Segment { start: 0.0, end: 4.0, fit: left },
                Segment { start: 5.0, end: 9.0, fit: right },
            ],
        };
        assert_eq!(m.eval(-1.0), 0.0);
        assert_eq!(m.eval(4.5), 5.5);
        assert_eq!(m.eval(5.0), 7.0);
        assert_eq!(m.eval(20.0), 22.0);
        assert_eq!(m.breakpoints(), vec![5.0]);
        assert!(m.covers(9.0) && !m.covers(9.5));
    }
}
