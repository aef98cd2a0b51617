//! Independent reference implementations used as test oracles.
//!
//! Everything here is deliberately naive: linear scans, pairwise loops and
//! normal equations written out by hand.

#![allow(dead_code)]

use paretune::accuracy::{AccuracySpec, PerfPoint};
use paretune::param_space::{
    build_search_space, GridSize, ParameterRanges, SearchSpace, SystemDescription,
};

/// Real-space bound written out term by term.
pub fn real_bound(alpha: f64, rc: f64, system: &SystemDescription) -> f64 {
    let [lx, ly, lz] = system.domain();
    let v = lx * ly * lz;
    let x = rc * alpha;
    let poly = 6.0 / x.powi(6) + 6.0 / x.powi(4) + 3.0 / x.powi(2) + 1.0;
    system.dispersion_coeff * std::f64::consts::PI.sqrt() * alpha.powi(5)
        / (system.n_particles as f64 * v * rc).sqrt()
        * poly
        * (-x * x).exp()
}

/// `ck * alpha * (alpha * h)^order` with `h` the coarsest grid spacing.
pub fn surrogate(ck: f64, alpha: f64, grid: GridSize, order: u32, system: &SystemDescription) -> f64 {
    let [lx, ly, lz] = system.domain();
    let h = (lx / grid.nx as f64).max(ly / grid.ny as f64).max(lz / grid.nz as f64);
    ck * alpha * (alpha * h).powi(order as i32)
}

pub fn accepts(spec: &AccuracySpec, real: f64, recip: f64) -> bool {
    match *spec {
        AccuracySpec::Combined { threshold } => (real * real + recip * recip).sqrt() <= threshold,
        AccuracySpec::Split { real_threshold, recip_threshold } => {
            real <= real_threshold && recip <= recip_threshold
        }
    }
}

/// One accurate point of the exhaustive scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanPoint {
    pub cutoff_index: usize,
    pub grid: GridSize,
    pub order: u32,
    /// Every alpha index that meets the spec.
    pub feasible: Vec<usize>,
}

/// Full 4-D lattice scan with the surrogate reciprocal model.
pub fn exhaustive_partition(space: &SearchSpace, spec: &AccuracySpec, ck: f64) -> Vec<ScanPoint> {
    let mut out = Vec::new();
    for (c, &rc) in space.cutoffs.iter().enumerate() {
        for &grid in &space.grids {
            for &order in &space.orders {
                let feasible: Vec<usize> = space
                    .alphas
                    .iter()
                    .enumerate()
                    .filter(|(_, &a)| {
                        accepts(
                            spec,
                            real_bound(a, rc, &space.system),
                            surrogate(ck, a, grid, order, &space.system),
                        )
                    })
                    .map(|(i, _)| i)
                    .collect();
                if !feasible.is_empty() {
                    out.push(ScanPoint { cutoff_index: c, grid, order, feasible });
                }
            }
        }
    }
    out
}

/// Widest run of consecutive indices, earliest on ties.
pub fn widest_run(indices: &[usize]) -> (usize, usize) {
    let mut best = (indices[0], indices[0]);
    let mut start = indices[0];
    for w in indices.windows(2) {
        if w[1] != w[0] + 1 {
            start = w[1];
        }
        if w[1] - start > best.1 - best.0 {
            best = (start, w[1]);
        }
    }
    best
}

fn weakly_dominates(a: &PerfPoint, b: &PerfPoint) -> bool {
    a.cutoff_index <= b.cutoff_index && a.grid.points() <= b.grid.points() && a.order <= b.order
}

fn same_cost(a: &PerfPoint, b: &PerfPoint) -> bool {
    a.cutoff_index == b.cutoff_index && a.grid.points() == b.grid.points() && a.order == b.order
}

/// Points no other point strictly dominates, by pairwise comparison.
pub fn pairwise_frontier(points: &[PerfPoint]) -> Vec<PerfPoint> {
    points
        .iter()
        .filter(|b| !points.iter().any(|a| weakly_dominates(a, b) && !same_cost(a, b)))
        .copied()
        .collect()
}

/// Largest alpha index passing `ok`, by linear scan.
pub fn scan_split(len: usize, ok: impl Fn(usize) -> bool) -> Option<usize> {
    (0..len).filter(|&i| ok(i)).last()
}

/// Ordinary least squares of `y` on `(1, phi(x))` via normal equations.
pub fn normal_equations(points: &[(f64, f64)], phi: impl Fn(f64) -> f64) -> (f64, f64) {
    let n = points.len() as f64;
    let (mut su, mut sy, mut suu, mut suy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        let u = phi(x);
        su += u;
        sy += y;
        suu += u * u;
        suy += u * y;
    }
    let slope = (n * suy - su * sy) / (n * suu - su * su);
    ((sy - slope * su) / n, slope)
}

/// Split index minimizing the summed squared relative residuals of two
/// independent linear fits, each side keeping at least two points.
pub fn best_linear_split(points: &[(f64, f64)]) -> usize {
    let cost = |pts: &[(f64, f64)]| -> f64 {
        let (a, b) = normal_equations(pts, |x| x);
        pts.iter().map(|&(x, y)| ((a + b * x - y) / y).powi(2)).sum()
    };
    (2..=points.len() - 2)
        .min_by(|&s, &t| {
            (cost(&points[..s]) + cost(&points[s..]))
                .total_cmp(&(cost(&points[..t]) + cost(&points[t..])))
        })
        .expect("at least four points")
}

/// Slab of 4000 particles in an elongated box, 8 processes.
pub fn si_system() -> SystemDescription {
    SystemDescription::bulk([11.01, 11.01, 176.16], 4000, 8, 4.0)
}

/// Shorter slab of 6000 particles.
pub fn sb_system() -> SystemDescription {
    SystemDescription::bulk([11.01, 11.01, 66.06], 6000, 8, 4.0)
}

/// Large cubic box on 96 processes.
pub fn lc_system() -> SystemDescription {
    SystemDescription::bulk([88.08, 88.08, 88.08], 512_000, 96, 4.0)
}

pub fn space_of(system: &SystemDescription, ranges: ParameterRanges) -> SearchSpace {
    build_search_space(system, &ranges).expect("valid space")
}
