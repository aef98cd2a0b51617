use std::collections::BTreeMap;

use super::{AdaptiveParams, SamplerError, SamplingError};
use crate::modeling::{fit_basis, Basis};

/// Median of a nonempty slice; the mean of the two middle values for even
/// lengths.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

struct Bisector<'a, F> {
    xs: &'a [f64],
    basis: Basis,
    params: &'a AdaptiveParams,
    measure_at: F,
    timings: BTreeMap<usize, f64>,
}

impl<F> Bisector<'_, F>
where
    F: FnMut(usize, u32) -> Result<f64, SamplerError>,
{
    fn sample(&mut self, index: usize) -> Result<f64, SamplingError> {
        if let Some(&t) = self.timings.get(&index) {
            return Ok(t);
        }
        let raw = (0..self.params.repeats_per_point)
            .map(|r| (self.measure_at)(index, r))
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|source| SamplingError::SamplerFailure { index, x: self.xs[index], source })?;
        let t = median(&raw);
        self.timings.insert(index, t);
        Ok(t)
    }

    fn bisect(&mut self, i: usize, j: usize, depth: u32) -> Result<(), SamplingError> {
        if j - i <= 1 {
            return Ok(());
        }
        let mid = (i + j) / 2;
        let tm = self.sample(mid)?;
        let points = [(self.xs[i], self.timings[&i]), (self.xs[mid], tm), (self.xs[j], self.timings[&j])];
        let fit = fit_basis(&points, self.basis).expect("strictly increasing positions");
        if fit.max_relative_error(&points) > self.params.rel_error_threshold
            && depth < self.params.max_depth
        {
            self.bisect(i, mid, depth + 1)?;
            self.bisect(mid, j, depth + 1)?;
        }
        Ok(())
    }
}

/// Recursive bisection sampling over positions `xs`.
///
/// Samples both ends, then the midpoint of every range whose three-point fit
/// in `basis` misses a sample by more than `rel_error_threshold`. Each index
/// is measured once (`repeats_per_point` raw calls, median kept); the result
/// maps sampled indices to seconds.
pub fn adaptive_sample<F>(
    xs: &[f64],
    basis: Basis,
    params: &AdaptiveParams,
    measure_at: F,
) -> Result<BTreeMap<usize, f64>, SamplingError>
where
    F: FnMut(usize, u32) -> Result<f64, SamplerError>,
{
    if xs.len() < 2 {
        return Err(SamplingError::TooFewPositions(xs.len()));
    }
    if xs.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(SamplingError::UnorderedPositions);
    }
    let mut b = Bisector { xs, basis, params, measure_at, timings: BTreeMap::new() };
    let last = xs.len() - 1;
    b.sample(0)?;
    b.sample(last)?;
    b.bisect(0, last, 1)?;
    Ok(b.timings)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cutoffs() -> Vec<f64> {
        (0..9).map(|k| 2.0 + 0.5 * k as f64).collect()
    }

    #[test]
    fn exact_cubic_needs_three_samples() {
        let xs = cutoffs();
        let mut calls = 0;
        let got = adaptive_sample(&xs, Basis::Cubic, &AdaptiveParams::default(), |i, _| {
            calls += 1;
            Ok(0.44 + 0.0565 * xs[i].powi(3))
        })
        .unwrap();
        assert_eq!(calls, 3);
        assert_eq!(got.keys().copied().collect::<Vec<_>>(), vec![0, 4, 8]);
    }

    #[test]
    fn two_positions_sample_only_endpoints() {
        let xs = [1.0, 2.0];
        let got = adaptive_sample(&xs, Basis::Linear, &AdaptiveParams::default(), |i, _| {
            Ok(1.0 + i as f64)
        })
        .unwrap();
        assert_eq!(got.len(), 2);
    }

    #[test]
    fn failures_carry_the_position() {
        let xs = cutoffs();
        let err = adaptive_sample(&xs, Basis::Cubic, &AdaptiveParams::default(), |i, _| {
            if i == 4 {
                Err(SamplerError::Failed("boom".into()))
            } else {
                Ok(1.0)
            }
        })
        .unwrap_err();
        assert!(matches!(err, SamplingError::SamplerFailure { index: 4, .. }));
    }

    #[test]
    fn rejects_bad_positions() {
        let p = AdaptiveParams::default();
        assert_eq!(
            adaptive_sample(&[1.0], Basis::Linear, &p, |_, _| Ok(1.0)),
            Err(SamplingError::TooFewPositions(1))
        );
        assert_eq!(
            adaptive_sample(&[1.0, 1.0, 2.0], Basis::Linear, &p, |_, _| Ok(1.0)),
            Err(SamplingError::UnorderedPositions)
        );
    }

    #[test]
    fn depth_limit_stops_recursion() {
        let xs: Vec<f64> = (0..33).map(f64::from).collect();
        let params = AdaptiveParams { max_depth: 1, ..Default::default() };
        let quadratic = |i: usize, _| Ok(1.0 + (i * i) as f64);
        let got = adaptive_sample(&xs, Basis::Linear, &params, quadratic).unwrap();
        assert_eq!(got.len(), 3);
        let deeper = AdaptiveParams { max_depth: 3, ..Default::default() };
        let got = adaptive_sample(&xs, Basis::Linear, &deeper, quadratic).unwrap();
        assert_eq!(got.len(), 9);
    }

    #[test]
    fn repeats_record_the_median() {
        let xs = [1.0, 2.0];
        let params = AdaptiveParams { repeats_per_point: 3, ..Default::default() };
        let got = adaptive_sample(&xs, Basis::Linear, &params, |i, r| Ok(10.0 * (i + 1) as f64 + [5.0, 1.0, 3.0][r as usize]))
            .unwrap();
        assert_eq!(got[&0], 13.0);
        assert_eq!(got[&1], 23.0);
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
    }
}
