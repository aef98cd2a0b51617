//! The discretized four-dimensional parameter space.
//!
//! A configuration of a mesh-Ewald solver is the tuple (alpha, cutoff, grid,
//! order). Alpha and cutoff are continuous and get discretized on regular
//! lattices; grid sizes are restricted to 5-smooth dimensions proportional to
//! the simulation domain, and bounded by a multiple of the particle count.
//!
//! The full space is never materialized. [`SearchSpace`] keeps the per-axis
//! value lists and reports the logical size.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative slack used when rounding ratios of user-supplied floats.
const ROUNDING_SLACK: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("invalid system description: {0}")]
    InvalidSystem(String),
    #[error("invalid parameter ranges: {0}")]
    InvalidRanges(String),
    #[error("no grid satisfies the bound of {max_points} grid points")]
    EmptyGridSet { max_points: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Geometry {
    Bulk,
    /// Particles initially fill a centered box inside the domain.
    Interfacial { box_x: f64, box_y: f64, box_z: f64 },
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry::Bulk
    }
}

fn default_timesteps() -> u32 {
    1000
}

fn default_procs() -> u32 {
    1
}

/// The simulated system. Lengths are in units of sigma.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemDescription {
    pub domain_x: f64,
    pub domain_y: f64,
    pub domain_z: f64,
    pub n_particles: u64,
    #[serde(default)]
    pub geometry: Geometry,
    #[serde(default = "default_procs")]
    pub n_procs: u32,
    pub dispersion_coeff: f64,
    #[serde(default = "default_timesteps")]
    pub timesteps_per_sample: u32,
}

impl SystemDescription {
    pub fn bulk(domain: [f64; 3], n_particles: u64, n_procs: u32, dispersion_coeff: f64) -> Self {
        SystemDescription {
            domain_x: domain[0],
            domain_y: domain[1],
            domain_z: domain[2],
            n_particles,
            geometry: Geometry::Bulk,
            n_procs,
            dispersion_coeff,
            timesteps_per_sample: default_timesteps(),
        }
    }

    pub fn domain(&self) -> [f64; 3] {
        [self.domain_x, self.domain_y, self.domain_z]
    }

    pub fn volume(&self) -> f64 {
        self.domain_x * self.domain_y * self.domain_z
    }

    pub fn validate(&self) -> Result<(), SpaceError> {
        let bad = |msg: &str| Err(SpaceError::InvalidSystem(msg.to_string()));
        if !self.domain().iter().all(|l| l.is_finite() && *l > 0.0) {
            return bad("domain lengths must be finite and positive");
        }
        if self.n_particles == 0 {
            return bad("n_particles must be at least 1");
        }
        if self.n_procs == 0 {
            return bad("n_procs must be at least 1");
        }
        if !(self.dispersion_coeff.is_finite() && self.dispersion_coeff > 0.0) {
            return bad("dispersion_coeff must be finite and positive");
        }
        if self.timesteps_per_sample == 0 {
            return bad("timesteps_per_sample must be at least 1");
        }
        if let Geometry::Interfacial { box_x, box_y, box_z } = self.geometry {
            let inner = [box_x, box_y, box_z];
            let fits = inner
                .iter()
                .zip(self.domain())
                .all(|(b, l)| b.is_finite() && *b > 0.0 && *b <= l);
            if !fits {
                return bad("interfacial box must be positive and fit inside the domain");
            }
        }
        Ok(())
    }
}

/// Bounds and steps of each axis of the search space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParameterRanges {
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub alpha_step: f64,
    pub cutoff_min: f64,
    pub cutoff_max: f64,
    pub cutoff_step: f64,
    pub orders: Vec<u32>,
    pub grid_point_factor: f64,
}

impl Default for ParameterRanges {
    fn default() -> Self {
        ParameterRanges {
            alpha_min: 0.01,
            alpha_max: 1.0,
            alpha_step: 0.01,
            cutoff_min: 2.0,
            cutoff_max: 6.0,
            cutoff_step: 0.1,
            orders: vec![2, 3, 4, 5, 6],
            grid_point_factor: 8.0,
        }
    }
}

impl ParameterRanges {
    pub fn validate(&self) -> Result<(), SpaceError> {
        let bad = |msg: &str| Err(SpaceError::InvalidRanges(msg.to_string()));
        let finite = [
            self.alpha_min,
            self.alpha_max,
            self.alpha_step,
            self.cutoff_min,
            self.cutoff_max,
            self.cutoff_step,
            self.grid_point_factor,
        ];
        if !finite.iter().all(|v| v.is_finite()) {
            return bad("all range bounds must be finite");
        }
        if !(self.alpha_min > 0.0 && self.alpha_min <= self.alpha_max) {
            return bad("alpha range must satisfy 0 < alpha_min <= alpha_max");
        }
        if !(self.cutoff_min > 0.0 && self.cutoff_min <= self.cutoff_max) {
            return bad("cutoff range must satisfy 0 < cutoff_min <= cutoff_max");
        }
        if self.alpha_step <= 0.0 || self.cutoff_step <= 0.0 {
            return bad("steps must be positive");
        }
        if self.grid_point_factor <= 0.0 {
            return bad("grid_point_factor must be positive");
        }
        if self.orders.is_empty() || self.orders.iter().any(|&p| p < 2) {
            return bad("orders must be a nonempty set of integers >= 2");
        }
        Ok(())
    }
}

/// Number of points `min + i * step` with `i >= 0` that do not exceed `max`.
pub fn lattice_len(min: f64, max: f64, step: f64) -> usize {
    ((max - min) / step + ROUNDING_SLACK).floor() as usize + 1
}

/// Values of a regular lattice, computed by index to avoid accumulated drift.
pub fn lattice_values(min: f64, max: f64, step: f64) -> Vec<f64> {
    (0..lattice_len(min, max, step))
        .map(|i| min + i as f64 * step)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSize {
    pub nx: u32,
    pub ny: u32,
    pub nz: u32,
}

impl GridSize {
    pub const UNIT: GridSize = GridSize { nx: 1, ny: 1, nz: 1 };

    pub fn new(nx: u32, ny: u32, nz: u32) -> Self {
        GridSize { nx, ny, nz }
    }

    pub fn points(&self) -> u64 {
        u64::from(self.nx) * u64::from(self.ny) * u64::from(self.nz)
    }

    pub fn dims(&self) -> [u32; 3] {
        [self.nx, self.ny, self.nz]
    }

    pub fn is_valid(&self) -> bool {
        self.dims().iter().all(|&n| n >= 1 && is_five_smooth(u64::from(n)))
    }
}

/// Grids order by total point count, then lexicographically by dimension.
impl Ord for GridSize {
    fn cmp(&self, other: &Self) -> Ordering {
        self.points()
            .cmp(&other.points())
            .then_with(|| self.dims().cmp(&other.dims()))
    }
}

impl PartialOrd for GridSize {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for GridSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.nx, self.ny, self.nz)
    }
}

/// Differentiation scheme of the target solver. Carried as a label only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Ad,
    Ik,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Ad => "ad",
            Variant::Ik => "ik",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One point of the search space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub alpha: f64,
    pub cutoff: f64,
    pub order: u32,
    pub grid: GridSize,
    pub variant: Variant,
}

/// True iff `n` has no prime factor other than 2, 3 and 5.
///
/// ```
/// use paretune::param_space::is_five_smooth;
/// assert!(is_five_smooth(60));
/// assert!(!is_five_smooth(66));
/// ```
pub fn is_five_smooth(n: u64) -> bool {
    assert!(n >= 1, "is_five_smooth is defined for positive integers");
    let mut m = n;
    for p in [2, 3, 5] {
        while m % p == 0 {
            m /= p;
        }
    }
    m == 1
}

/// Smallest 5-smooth integer `>= n`.
pub fn next_five_smooth(n: u64) -> u64 {
    let mut m = n.max(1);
    while !is_five_smooth(m) {
        m += 1;
    }
    m
}

/// Enumerates the admissible grids for a system.
///
/// For every base resolution `b >= 2` along the shortest domain edge, the
/// ideal count along each axis is `b * L_axis / L_min`, rounded up to the next
/// 5-smooth integer. Enumeration stops once the total exceeds
/// `grid_point_factor * n_particles`.
pub fn enumerate_grid_sizes(
    system: &SystemDescription,
    ranges: &ParameterRanges,
) -> Result<Vec<GridSize>, SpaceError> {
    system.validate()?;
    ranges.validate()?;
    let domain = system.domain();
    let shortest = domain.iter().copied().fold(f64::INFINITY, f64::min);
    let max_points = ranges.grid_point_factor * system.n_particles as f64;

    let mut grids = Vec::new();
    for base in 2u64.. {
        let dims = domain.map(|len| {
            let ideal = base as f64 * len / shortest;
            let at_least = (ideal * (1.0 - ROUNDING_SLACK)).ceil().max(1.0) as u64;
            next_five_smooth(at_least)
        });
        let grid = GridSize::new(dims[0] as u32, dims[1] as u32, dims[2] as u32);
        if grid.points() as f64 > max_points {
            break;
        }
        grids.push(grid);
    }
    grids.sort();
    grids.dedup();
    if grids.is_empty() {
        return Err(SpaceError::EmptyGridSet { max_points });
    }
    Ok(grids)
}

/// The discretized search space for one system.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    pub system: SystemDescription,
    pub ranges: ParameterRanges,
    pub alphas: Vec<f64>,
    pub cutoffs: Vec<f64>,
    pub grids: Vec<GridSize>,
    pub orders: Vec<u32>,
}

impl SearchSpace {
    /// `|alphas| * |cutoffs| * |grids| * |orders|`.
    pub fn logical_size(&self) -> u128 {
        [self.alphas.len(), self.cutoffs.len(), self.grids.len(), self.orders.len()]
            .iter()
            .map(|&n| n as u128)
            .product()
    }

    /// Number of (cutoff, grid, order) points once alpha is projected out.
    pub fn perf_space_size(&self) -> usize {
        self.cutoffs.len() * self.grids.len() * self.orders.len()
    }

    pub fn alpha_step(&self) -> f64 {
        self.ranges.alpha_step
    }

    /// Index of the lattice value closest to `cutoff`, if it lies on the lattice.
    pub fn cutoff_index(&self, cutoff: f64) -> Option<usize> {
        lattice_index(&self.cutoffs, self.ranges.cutoff_min, self.ranges.cutoff_step, cutoff)
    }

    pub fn alpha_index(&self, alpha: f64) -> Option<usize> {
        lattice_index(&self.alphas, self.ranges.alpha_min, self.ranges.alpha_step, alpha)
    }
}

fn lattice_index(values: &[f64], min: f64, step: f64, x: f64) -> Option<usize> {
    let pos = ((x - min) / step).round();
    if pos < 0.0 || pos as usize >= values.len() {
        return None;
    }
    let i = pos as usize;
    ((values[i] - x).abs() <= step * 1e-6).then_some(i)
}

pub fn build_search_space(
    system: &SystemDescription,
    ranges: &ParameterRanges,
) -> Result<SearchSpace, SpaceError> {
    let grids = enumerate_grid_sizes(system, ranges)?;
    let mut orders = ranges.orders.clone();
    orders.sort_unstable();
    orders.dedup();
    Ok(SearchSpace {
        system: system.clone(),
        ranges: ranges.clone(),
        alphas: lattice_values(ranges.alpha_min, ranges.alpha_max, ranges.alpha_step),
        cutoffs: lattice_values(ranges.cutoff_min, ranges.cutoff_max, ranges.cutoff_step),
        grids,
        orders,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn system(domain: [f64; 3], n: u64) -> SystemDescription {
        SystemDescription::bulk(domain, n, 8, 4.0)
    }

    #[test]
    fn five_smooth_examples() {
        assert!(is_five_smooth(60));
        assert!(!is_five_smooth(66));
        assert!(is_five_smooth(1));
        assert!(is_five_smooth(2 * 2 * 3 * 5 * 5 * 5));
        assert!(!is_five_smooth(7));
        assert_eq!(next_five_smooth(61), 64);
        assert_eq!(next_five_smooth(176), 180);
    }

    #[test]
    fn cubic_large_system_contains_published_grids() {
        let s = system([88.08; 3], 512_000);
        let grids = enumerate_grid_sizes(&s, &ParameterRanges::default()).unwrap();
        assert!(grids.contains(&GridSize::new(80, 80, 80)));
        assert!(grids.contains(&GridSize::new(90, 90, 90)));
        assert_eq!(grids.first(), Some(&GridSize::new(2, 2, 2)));
        assert_eq!(grids.last(), Some(&GridSize::new(160, 160, 160)));
    }

    #[test]
    fn elongated_domain_keeps_aspect_ratio() {
        let s = system([11.01, 11.01, 176.16], 4000);
        let grids = enumerate_grid_sizes(&s, &ParameterRanges::default()).unwrap();
        assert!(grids.contains(&GridSize::new(10, 10, 160)));
        assert!(grids.contains(&GridSize::new(12, 12, 180)));
        for g in &grids {
            assert!(g.nz >= 16 * g.nx - 16, "{g} lost the 1:16 shape");
        }
    }

    #[test]
    fn single_particle_has_no_room_for_an_elongated_grid() {
        let s = system([1.0, 1.0, 16.0], 1);
        let err = enumerate_grid_sizes(&s, &ParameterRanges::default()).unwrap_err();
        assert!(matches!(err, SpaceError::EmptyGridSet { .. }));
    }

    #[test]
    fn single_particle_cubic_domain_admits_only_the_minimum_grid() {
        let s = system([1.0; 3], 1);
        let grids = enumerate_grid_sizes(&s, &ParameterRanges::default()).unwrap();
        assert_eq!(grids, vec![GridSize::new(2, 2, 2)]);
        let tight = ParameterRanges { grid_point_factor: 7.9, ..Default::default() };
        assert!(enumerate_grid_sizes(&s, &tight).is_err());
    }

    #[test]
    fn default_lattice_counts() {
        let s = system([11.01, 11.01, 66.06], 6000);
        let space = build_search_space(&s, &ParameterRanges::default()).unwrap();
        assert_eq!(space.alphas.len(), 100);
        assert_eq!(space.cutoffs.len(), 41);
        assert!((space.alphas[99] - 1.0).abs() < 1e-12);
        assert!((space.cutoffs[40] - 6.0).abs() < 1e-12);
        assert_eq!(
            space.logical_size(),
            100 * 41 * space.grids.len() as u128 * 5
        );
    }

    #[test]
    fn degenerate_alpha_range() {
        let s = system([10.0; 3], 1000);
        let ranges = ParameterRanges { alpha_min: 0.5, alpha_max: 0.5, ..Default::default() };
        let space = build_search_space(&s, &ranges).unwrap();
        assert_eq!(space.alphas, vec![0.5]);
    }

    #[test]
    fn lattice_lookup_is_index_based() {
        let s = system([10.0; 3], 1000);
        let space = build_search_space(&s, &ParameterRanges::default()).unwrap();
        assert_eq!(space.cutoff_index(4.6), Some(26));
        assert_eq!(space.alpha_index(0.57), Some(56));
        assert_eq!(space.cutoff_index(4.65), None);
        assert_eq!(space.cutoff_index(7.0), None);
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        let mut s = system([10.0; 3], 1000);
        s.dispersion_coeff = 0.0;
        assert!(s.validate().is_err());
        let mut s = system([10.0; 3], 1000);
        s.geometry = Geometry::Interfacial { box_x: 10.0, box_y: 10.0, box_z: 11.0 };
        assert!(s.validate().is_err());
        let r = ParameterRanges { orders: vec![1, 2], ..Default::default() };
        assert!(r.validate().is_err());
        let r = ParameterRanges { alpha_min: 0.0, ..Default::default() };
        assert!(r.validate().is_err());
    }
}
