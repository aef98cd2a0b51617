use serde::{Deserialize, Serialize};

use super::ModelError;

/// Two-term cost model family: `intercept + slope * phi(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    /// `phi(x) = x^3`, used for real-space time against the cutoff.
    Cubic,
    /// `phi(x) = x`, used for reciprocal time against the grid point count.
    Linear,
}

impl Basis {
    pub fn phi(&self, x: f64) -> f64 {
        match self {
            Basis::Cubic => x * x * x,
            Basis::Linear => x,
        }
    }
}

/// Least-squares fit in one [`Basis`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostFit {
    pub basis: Basis,
    pub intercept: f64,
    pub slope: f64,
}

impl CostFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.intercept + self.slope * self.basis.phi(x)
    }

    /// Mean of `|f(x) - y| / y`.
    pub fn mean_relative_error(&self, points: &[(f64, f64)]) -> f64 {
        if points.is_empty() {
            return 0.0;
        }
        points.iter().map(|&(x, y)| relative_error(self.eval(x), y)).sum::<f64>()
            / points.len() as f64
    }

    pub fn max_relative_error(&self, points: &[(f64, f64)]) -> f64 {
        points.iter().map(|&(x, y)| relative_error(self.eval(x), y)).fold(0.0, f64::max)
    }

    /// Sum of squared relative residuals.
    pub fn relative_sse(&self, points: &[(f64, f64)]) -> f64 {
        points.iter().map(|&(x, y)| relative_error(self.eval(x), y).powi(2)).sum()
    }
}

fn relative_error(fitted: f64, measured: f64) -> f64 {
    if measured == 0.0 {
        if fitted == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        ((fitted - measured) / measured).abs()
    }
}

/// Real-space model `a + b * rc^3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubicFit {
    /// Overhead in seconds.
    pub a: f64,
    pub b: f64,
}

impl CubicFit {
    pub fn eval(&self, cutoff: f64) -> f64 {
        self.a + self.b * cutoff.powi(3)
    }
}

impl From<CubicFit> for CostFit {
    fn from(f: CubicFit) -> Self {
        CostFit { basis: Basis::Cubic, intercept: f.a, slope: f.b }
    }
}

/// Reciprocal-space model `p + b * g` for one interpolation order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    /// Particle-to-mesh mapping overhead in seconds.
    pub p: f64,
    pub b: f64,
}

impl LinearFit {
    pub fn eval(&self, grid_points: f64) -> f64 {
        self.p + self.b * grid_points
    }
}

impl From<LinearFit> for CostFit {
    fn from(f: LinearFit) -> Self {
        CostFit { basis: Basis::Linear, intercept: f.p, slope: f.b }
    }
}

/// Closed-form least squares over `{1, phi(x)}`.
///
/// Points are sorted first so the result does not depend on input order.
/// The normal equations are solved in centered form.
pub fn fit_basis(points: &[(f64, f64)], basis: Basis) -> Result<CostFit, ModelError> {
    if points.len() < 2 {
        return Err(ModelError::TooFewPoints { needed: 2, got: points.len() });
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let n = sorted.len() as f64;
    let mean_u = sorted.iter().map(|&(x, _)| basis.phi(x)).sum::<f64>() / n;
    let mean_y = sorted.iter().map(|&(_, y)| y).sum::<f64>() / n;
    let (mut suu, mut suy) = (0.0, 0.0);
    for &(x, y) in &sorted {
        let du = basis.phi(x) - mean_u;
        suu += du * du;
        suy += du * (y - mean_y);
    }
    if suu == 0.0 {
        return Err(ModelError::DegenerateFit);
    }
    let slope = suy / suu;
    Ok(CostFit { basis, intercept: mean_y - slope * mean_u, slope })
}

/// Fits `a + b * c^3` to `(cutoff, seconds)` samples.
pub fn fit_cubic(points: &[(f64, f64)]) -> Result<CubicFit, ModelError> {
    let f = fit_basis(points, Basis::Cubic)?;
    if f.slope < 0.0 {
        log::warn!("cubic fit has negative slope {:.3e}; samples may be too noisy", f.slope);
    }
    Ok(CubicFit { a: f.intercept, b: f.slope })
}

/// Fits `p + b * g` to `(grid points, seconds)` samples.
pub fn fit_linear(points: &[(f64, f64)]) -> Result<LinearFit, ModelError> {
    let f = fit_basis(points, Basis::Linear)?;
    if f.slope < 0.0 {
        log::warn!("linear fit has negative slope {:.3e}; samples may be too noisy", f.slope);
    }
    Ok(LinearFit { p: f.intercept, b: f.slope })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_points_are_interpolated_exactly() {
        let f = fit_cubic(&[(2.0, 1.0), (4.0, 8.0)]).unwrap();
        // b = 7 / 56, a = 1 - 8 b
        assert!((f.b - 0.125).abs() < 1e-15);
        assert!((f.a - 0.0).abs() < 1e-15);
        assert!((f.eval(2.0) - 1.0).abs() < 1e-14 && (f.eval(4.0) - 8.0).abs() < 1e-14);

        let l = fit_linear(&[(100.0, 2.0), (300.0, 3.0)]).unwrap();
        assert!((l.eval(100.0) - 2.0).abs() < 1e-14 && (l.eval(300.0) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn equal_positions_are_degenerate() {
        assert_eq!(fit_cubic(&[(3.0, 1.0), (3.0, 2.0)]), Err(ModelError::DegenerateFit));
        assert_eq!(
            fit_linear(&[(3.0, 1.0)]),
            Err(ModelError::TooFewPoints { needed: 2, got: 1 })
        );
    }

    #[test]
    fn relative_error_metrics() {
        let f = CostFit { basis: Basis::Linear, intercept: 0.0, slope: 1.0 };
        let pts = [(1.0, 2.0), (2.0, 2.0)];
        assert!((f.mean_relative_error(&pts) - 0.25).abs() < 1e-15);
        assert!((f.max_relative_error(&pts) - 0.5).abs() < 1e-15);
        assert!((f.relative_sse(&pts) - 0.25).abs() < 1e-15);
    }
}
