//! A synthetic mesh-Ewald solver with known timing laws.
//!
//! It stands in for a real simulation during desk-scale runs and doubles as a
//! brute-force oracle. Real-space time is `a_r + b_r rc^3`; reciprocal time
//! per order is `p + b g`, plus a constant step once `nz` reaches the process
//! count (the slab to pencil switch of distributed FFTs) and a small linear
//! dependence on the cutoff. Multiplicative Gaussian noise is drawn from a
//! counter-based stream so every measurement is reproducible.
//!
//! Default coefficients are illustrative, not measurements of any machine.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::accuracy::{real_space_error, AccuracySpec, ErrorEstimate, SurrogateModel};
use crate::param_space::{Configuration, GridSize, SearchSpace, SystemDescription, Variant};
use crate::sampling::{Phase, Sampler, SamplerError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("no reciprocal-space coefficients for interpolation order {0}")]
    UnknownOrder(u32),
    #[error("invalid synthetic parameters: {0}")]
    InvalidParams(String),
    #[error("empty accurate subspace: no configuration meets the accuracy target")]
    EmptyAccurateSubspace,
}

/// Reciprocal-space law `p + b * g` of one interpolation order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecipCoeffs {
    pub p: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthParams {
    pub a_r: f64,
    pub b_r: f64,
    pub recip: BTreeMap<u32, RecipCoeffs>,
    pub shift_mag: f64,
    pub gamma_rc: f64,
    pub noise_frac: f64,
    pub rng_seed: u64,
    pub n_procs: u32,
    pub surrogate_ck: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        let recip = [
            (2, 0.52, 5.1e-5),
            (3, 0.85, 6.0e-5),
            (4, 1.28, 7.1e-5),
            (5, 1.81, 8.33e-5),
            (6, 2.45, 9.7e-5),
        ]
        .into_iter()
        .map(|(order, p, b)| (order, RecipCoeffs { p, b }))
        .collect();
        SynthParams {
            a_r: 0.44,
            b_r: 0.0565,
            recip,
            shift_mag: 0.5,
            gamma_rc: 0.08,
            noise_frac: 0.02,
            rng_seed: 0,
            n_procs: 8,
            surrogate_ck: 1.0,
        }
    }
}

impl SynthParams {
    pub fn noise_free(mut self) -> Self {
        self.noise_frac = 0.0;
        self
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidParams(m));
        let coeffs = [self.a_r, self.b_r, self.shift_mag, self.gamma_rc]
            .into_iter()
            .chain(self.recip.values().flat_map(|c| [c.p, c.b]));
        for c in coeffs {
            if !(c.is_finite() && c >= 0.0) {
                return bad(format!("time coefficients must be finite and >= 0, got {c}"));
            }
        }
        if !(0.0..=0.2).contains(&self.noise_frac) {
            return bad(format!("noise_frac must lie in [0, 0.2], got {}", self.noise_frac));
        }
        if !(self.surrogate_ck.is_finite() && self.surrogate_ck > 0.0) {
            return bad(format!("surrogate_ck must be positive, got {}", self.surrogate_ck));
        }
        if self.n_procs == 0 {
            return bad("n_procs must be at least 1".into());
        }
        Ok(())
    }

    fn coeffs(&self, order: u32) -> Result<RecipCoeffs, SynthError> {
        self.recip.get(&order).copied().ok_or(SynthError::UnknownOrder(order))
    }

    pub fn real_seconds(&self, cutoff: f64) -> f64 {
        self.a_r + self.b_r * cutoff.powi(3)
    }

    pub fn recip_seconds(&self, cutoff: f64, grid: GridSize, order: u32) -> Result<f64, SynthError> {
        let c = self.coeffs(order)?;
        let shift = if grid.nz >= self.n_procs { self.shift_mag } else { 0.0 };
        Ok(c.p + c.b * grid.points() as f64 + shift + self.gamma_rc * cutoff)
    }

    pub fn surrogate(&self) -> SurrogateModel {
        SurrogateModel::new(self.surrogate_ck)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream_key(seed: u64, config: &Configuration, phase: Phase, repeat: u32) -> u64 {
    let words = [
        config.alpha.to_bits(),
        config.cutoff.to_bits(),
        u64::from(config.order),
        u64::from(config.grid.nx),
        u64::from(config.grid.ny),
        u64::from(config.grid.nz),
        config.variant as u64,
        phase as u64,
        u64::from(repeat),
    ];
    words.iter().fold(splitmix64(seed), |h, &w| splitmix64(h ^ w))
}

/// Multiplicative noise factor `max(0.5, 1 + noise_frac * z)`.
fn noise_factor(params: &SynthParams, config: &Configuration, phase: Phase, repeat: u32) -> f64 {
    if params.noise_frac == 0.0 {
        return 1.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(stream_key(params.rng_seed, config, phase, repeat));
    let z: f64 = StandardNormal.sample(&mut rng);
    (1.0 + params.noise_frac * z).max(0.5)
}

/// Seconds per 1000 timesteps of one phase of `config`.
///
/// `repeat` selects an independent noise draw.
pub fn synth_time(
    config: &Configuration,
    phase: Phase,
    params: &SynthParams,
    repeat: u32,
) -> Result<f64, SynthError> {
    let base = match phase {
        Phase::RealSpace => params.real_seconds(config.cutoff),
        Phase::ReciprocalSpace => params.recip_seconds(config.cutoff, config.grid, config.order)?,
        Phase::Total => {
            params.real_seconds(config.cutoff)
                + params.recip_seconds(config.cutoff, config.grid, config.order)?
        }
    };
    Ok(base * noise_factor(params, config, phase, repeat))
}

pub fn synth_recip_error(
    alpha: f64,
    grid: GridSize,
    order: u32,
    system: &SystemDescription,
    params: &SynthParams,
) -> f64 {
    params.surrogate().error(alpha, grid, order, system)
}

/// [`Sampler`] backed by [`synth_time`]. Safe to call concurrently.
#[derive(Debug, Clone)]
pub struct SyntheticSampler {
    pub params: SynthParams,
}

impl SyntheticSampler {
    pub fn new(params: SynthParams) -> Self {
        SyntheticSampler { params }
    }
}

impl Sampler for SyntheticSampler {
    fn measure(
        &self,
        config: &Configuration,
        phase: Phase,
        timesteps: u32,
        repeat: u32,
    ) -> Result<f64, SamplerError> {
        let per_thousand = synth_time(config, phase, &self.params, repeat)
            .map_err(|e| SamplerError::Failed(e.to_string()))?;
        Ok(per_thousand * f64::from(timesteps) / 1000.0)
    }

    fn concurrent(&self) -> bool {
        true
    }
}

/// The fastest accurate configuration, found by exhaustive evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Optimum {
    pub config: Configuration,
    /// Noise-free total seconds per 1000 timesteps.
    pub seconds: f64,
    pub alpha_interval: (f64, f64),
}

/// Exhaustive noise-free search over every accurate (cutoff, grid, order).
///
/// A point is accurate when some alpha on the lattice meets `spec` under
/// [`real_space_error`] and [`synth_recip_error`]. Ties are broken like the
/// frontier ranking: fewer grid points, lower order, smaller cutoff.
pub fn true_optimum(
    space: &SearchSpace,
    spec: &AccuracySpec,
    params: &SynthParams,
    variant: Variant,
) -> Result<Optimum, SynthError> {
    let system = &space.system;
    let candidates: Vec<(usize, GridSize, u32)> = (0..space.cutoffs.len())
        .flat_map(|c| {
            space
                .grids
                .iter()
                .flat_map(move |&g| space.orders.iter().map(move |&p| (c, g, p)))
        })
        .collect();

    let found: Vec<Option<(Optimum, [u32; 3])>> = candidates
        .par_iter()
        .map(|&(c, grid, order)| {
            let cutoff = space.cutoffs[c];
            let feasible: Vec<usize> = (0..space.alphas.len())
                .filter(|&i| {
                    let alpha = space.alphas[i];
                    let estimate = ErrorEstimate {
                        real_err: real_space_error(alpha, cutoff, system).unwrap_or(f64::INFINITY),
                        recip_err: synth_recip_error(alpha, grid, order, system, params),
                    };
                    spec.accepts(estimate)
                })
                .collect();
            let (Some(&lo), Some(&hi)) = (feasible.first(), feasible.last()) else {
                return Ok(None);
            };
            let config = Configuration {
                alpha: space.alphas[(lo + hi) / 2],
                cutoff,
                order,
                grid,
                variant,
            };
            let seconds = params.real_seconds(cutoff) + params.recip_seconds(cutoff, grid, order)?;
            let opt = Optimum { config, seconds, alpha_interval: (space.alphas[lo], space.alphas[hi]) };
            Ok(Some((opt, grid.dims())))
        })
        .collect::<Result<_, SynthError>>()?;

    found
        .into_iter()
        .flatten()
        .min_by(|(a, da), (b, db)| {
            a.seconds
                .total_cmp(&b.seconds)
                .then(a.config.grid.points().cmp(&b.config.grid.points()))
                .then(a.config.order.cmp(&b.config.order))
                .then(a.config.cutoff.total_cmp(&b.config.cutoff))
                .then(da.cmp(db))
        })
        .map(|(opt, _)| opt)
        .ok_or(SynthError::EmptyAccurateSubspace)
}
