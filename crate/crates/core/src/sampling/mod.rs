//! Measuring the target code.
//!
//! A [`Sampler`] times one phase of one configuration. Plans decide which
//! configurations to time: the static plans cover a dense predetermined set,
//! while [`adaptive_sample`] bisects a range and stops where a local fit is
//! already good enough.

mod adaptive;
mod external;
mod plan;

use std::fmt;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use adaptive::{adaptive_sample, median};
pub use external::{render_template, ExternalCommandSampler};
pub use plan::{
    dynamic_recip_plan, static_real_plan, static_recip_plan, static_recip_plan_for_orders,
    DynamicPlan, RecipPass, SAMPLING_ALPHA,
};

use crate::param_space::Configuration;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplerError {
    #[error("failed to run sampler command: {0}")]
    Spawn(String),
    #[error("could not parse a timing from sampler output: {0}")]
    Parse(String),
    #[error("sampler reported a non-positive time of {0} s")]
    NonPositiveTime(f64),
    #[error("{0}")]
    Failed(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplingError {
    #[error("adaptive sampling needs at least two positions, got {0}")]
    TooFewPositions(usize),
    #[error("sample positions must be strictly increasing")]
    UnorderedPositions,
    #[error("sampler failed at position {index} (x = {x}): {source}")]
    SamplerFailure {
        index: usize,
        x: f64,
        #[source]
        source: SamplerError,
    },
}

/// Which part of a timestep is being timed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Phase {
    #[serde(rename = "real")]
    RealSpace,
    #[serde(rename = "reciprocal")]
    ReciprocalSpace,
    #[serde(rename = "total")]
    Total,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::RealSpace => "real",
            Phase::ReciprocalSpace => "reciprocal",
            Phase::Total => "total",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Phase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "real" => Ok(Phase::RealSpace),
            "reciprocal" => Ok(Phase::ReciprocalSpace),
            "total" => Ok(Phase::Total),
            other => Err(format!("unknown phase `{other}`")),
        }
    }
}

/// Times one phase of a configuration over `timesteps` steps.
pub trait Sampler: Send + Sync {
    /// Wall seconds; finite and positive. `repeat` numbers repeated
    /// measurements of the same configuration, starting at zero.
    fn measure(
        &self,
        config: &Configuration,
        phase: Phase,
        timesteps: u32,
        repeat: u32,
    ) -> Result<f64, SamplerError>;

    /// Whether `measure` may be called from several threads at once.
    fn concurrent(&self) -> bool {
        false
    }
}

impl<S: Sampler + ?Sized> Sampler for Box<S> {
    fn measure(
        &self,
        config: &Configuration,
        phase: Phase,
        timesteps: u32,
        repeat: u32,
    ) -> Result<f64, SamplerError> {
        (**self).measure(config, phase, timesteps, repeat)
    }

    fn concurrent(&self) -> bool {
        (**self).concurrent()
    }
}

impl<S: Sampler + ?Sized> Sampler for &S {
    fn measure(
        &self,
        config: &Configuration,
        phase: Phase,
        timesteps: u32,
        repeat: u32,
    ) -> Result<f64, SamplerError> {
        (**self).measure(config, phase, timesteps, repeat)
    }

    fn concurrent(&self) -> bool {
        (**self).concurrent()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub config: Configuration,
    pub phase: Phase,
    pub seconds: f64,
    pub repeat_index: u32,
}

fn default_threshold() -> f64 {
    0.05
}

fn default_depth() -> u32 {
    8
}

fn default_repeats() -> u32 {
    1
}

/// Controls for [`adaptive_sample`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveParams {
    /// Largest relative error of a local three-point fit that stops bisection.
    #[serde(default = "default_threshold")]
    pub rel_error_threshold: f64,
    #[serde(default = "default_depth")]
    pub max_depth: u32,
    /// Raw measurements per position; their median is recorded.
    #[serde(default = "default_repeats")]
    pub repeats_per_point: u32,
}

impl Default for AdaptiveParams {
    fn default() -> Self {
        AdaptiveParams {
            rel_error_threshold: default_threshold(),
            max_depth: default_depth(),
            repeats_per_point: default_repeats(),
        }
    }
}

impl AdaptiveParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.rel_error_threshold > 0.0) {
            return Err("rel_error_threshold must be positive".into());
        }
        if self.max_depth < 1 {
            return Err("max_depth must be at least 1".into());
        }
        if self.repeats_per_point < 1 {
            return Err("repeats_per_point must be at least 1".into());
        }
        Ok(())
    }
}

/// Wraps a sampler and keeps every successful measurement.
pub struct RecordingSampler<S> {
    inner: S,
    records: Mutex<Vec<SampleRecord>>,
}

impl<S: Sampler> RecordingSampler<S> {
    pub fn new(inner: S) -> Self {
        RecordingSampler { inner, records: Mutex::new(Vec::new()) }
    }

    pub fn invocations(&self) -> usize {
        self.records.lock().expect("recorder lock").len()
    }

    /// Records sorted by phase, order, cutoff, grid and repeat.
    pub fn records(&self) -> Vec<SampleRecord> {
        let mut out = self.records.lock().expect("recorder lock").clone();
        out.sort_by(|a, b| {
            a.phase
                .cmp(&b.phase)
                .then(a.config.order.cmp(&b.config.order))
                .then(a.config.cutoff.total_cmp(&b.config.cutoff))
                .then(a.config.grid.cmp(&b.config.grid))
                .then(a.config.alpha.total_cmp(&b.config.alpha))
                .then(a.repeat_index.cmp(&b.repeat_index))
        });
        out
    }

    pub fn into_inner(self) -> S {
        self.inner
    }
}

impl<S: Sampler> Sampler for RecordingSampler<S> {
    fn measure(
        &self,
        config: &Configuration,
        phase: Phase,
        timesteps: u32,
        repeat: u32,
    ) -> Result<f64, SamplerError> {
        let seconds = self.inner.measure(config, phase, timesteps, repeat)?;
        if !(seconds.is_finite() && seconds > 0.0) {
            return Err(SamplerError::NonPositiveTime(seconds));
        }
        let record = SampleRecord { config: *config, phase, seconds, repeat_index: repeat };
        self.records.lock().expect("recorder lock").push(record);
        Ok(seconds)
    }

    fn concurrent(&self) -> bool {
        self.inner.concurrent()
    }
}
