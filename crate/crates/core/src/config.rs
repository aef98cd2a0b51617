//! JSON configuration of a tuning run (`"schema": 1`).
//!
//! ```json
//! {
//!   "schema": 1,
//!   "system": { "domain_x": 11.01, "domain_y": 11.01, "domain_z": 176.16,
//!               "n_particles": 4000, "n_procs": 8, "dispersion_coeff": 4.0 },
//!   "accuracy": { "mode": "split", "real_threshold": 1e-6, "recip_threshold": 1e-3 },
//!   "sampler": { "synthetic": { "noise_frac": 0.02, "rng_seed": 1 } }
//! }
//! ```
//!
//! `ranges`, `adaptive`, `variants`, `reciprocal_error`, `output` and
//! `baseline` are optional.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::accuracy::{AccuracySpec, ReciprocalErrorModel, SurrogateModel, TabulatedModel};
use crate::param_space::{GridSize, ParameterRanges, SystemDescription, Variant};
use crate::sampling::{AdaptiveParams, ExternalCommandSampler, Sampler};
use crate::synth_sim::{SynthParams, SyntheticSampler};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported config schema {0}, expected {SCHEMA_VERSION}")]
    Schema(u32),
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn default_timeout() -> f64 {
    ExternalCommandSampler::DEFAULT_TIMEOUT.as_secs_f64()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalSamplerConfig {
    pub template: String,
    pub parser_regex: String,
    #[serde(default = "default_timeout")]
    pub timeout_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerConfig {
    Synthetic(SynthParams),
    External(ExternalSamplerConfig),
}

/// Where reciprocal-space error estimates come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecipErrorConfig {
    Surrogate { ck: f64 },
    /// CSV with header `nx,ny,nz,order,alpha,recip_err`, relative to the
    /// config file.
    Table { path: PathBuf },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

/// A hand-picked configuration to compare against, e.g. an expert's guess.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineConfig {
    pub alpha: f64,
    pub cutoff: f64,
    pub order: u32,
    pub grid: GridSize,
}

fn default_variants() -> Vec<Variant> {
    vec![Variant::Ik]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuneConfig {
    pub schema: u32,
    pub system: SystemDescription,
    #[serde(default)]
    pub ranges: ParameterRanges,
    pub accuracy: AccuracySpec,
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub reciprocal_error: Option<RecipErrorConfig>,
    #[serde(default)]
    pub adaptive: AdaptiveParams,
    #[serde(default = "default_variants")]
    pub variants: Vec<Variant>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub baseline: Option<BaselineConfig>,
    /// Directory of the config file; relative paths resolve against it.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl TuneConfig {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        let mut config = Self::from_json(&text)?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(config)
    }

    /// Parses and validates. A synthetic sampler without `n_procs` inherits
    /// the system's process count.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let mut value: serde_json::Value = serde_json::from_str(text)?;
        if let Some(schema) = value.get("schema").and_then(|s| s.as_u64()) {
            if schema != u64::from(SCHEMA_VERSION) {
                return Err(ConfigError::Schema(schema as u32));
            }
        }
        let procs = value.pointer("/system/n_procs").cloned();
        if let (Some(procs), Some(synth)) =
            (procs, value.pointer_mut("/sampler/synthetic").and_then(|s| s.as_object_mut()))
        {
            synth.entry("n_procs").or_insert(procs);
        }
        let config: TuneConfig = serde_json::from_value(value)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: String| ConfigError::Invalid(e);
        if self.schema != SCHEMA_VERSION {
            return Err(ConfigError::Schema(self.schema));
        }
        self.system.validate().map_err(|e| invalid(e.to_string()))?;
        self.ranges.validate().map_err(|e| invalid(e.to_string()))?;
        self.accuracy.validate().map_err(|e| invalid(e.to_string()))?;
        self.adaptive.validate().map_err(invalid)?;
        if self.variants.is_empty() {
            return Err(invalid("variants must not be empty".into()));
        }
        let mut seen = self.variants.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.variants.len() {
            return Err(invalid("variants must not repeat".into()));
        }
        match &self.sampler {
            SamplerConfig::Synthetic(p) => p.validate().map_err(|e| invalid(e.to_string()))?,
            SamplerConfig::External(e) => {
                if !(e.timeout_s.is_finite() && e.timeout_s > 0.0) {
                    return Err(invalid("timeout_s must be positive".into()));
                }
                if self.reciprocal_error.is_none() {
                    return Err(invalid(
                        "an external sampler needs a `reciprocal_error` model".into(),
                    ));
                }
                ExternalCommandSampler::new(e.template.clone(), &e.parser_regex)
                    .map_err(|e| invalid(e.to_string()))?;
            }
        }
        if let Some(RecipErrorConfig::Surrogate { ck }) = self.reciprocal_error {
            if !(ck.is_finite() && ck > 0.0) {
                return Err(invalid("surrogate ck must be positive".into()));
            }
        }
        if let Some(b) = &self.baseline {
            if !(b.alpha > 0.0 && b.cutoff > 0.0 && b.grid.is_valid() && b.order >= 2) {
                return Err(invalid("baseline must be a valid configuration".into()));
            }
        }
        Ok(())
    }

    pub fn reciprocal_model(&self) -> Result<Box<dyn ReciprocalErrorModel>, ConfigError> {
        match (&self.reciprocal_error, &self.sampler) {
            (Some(RecipErrorConfig::Surrogate { ck }), _) => Ok(Box::new(SurrogateModel::new(*ck))),
            (Some(RecipErrorConfig::Table { path }), _) => {
                let path = self.base_dir.join(path);
                TabulatedModel::from_path(&path)
                    .map(|m| Box::new(m) as Box<dyn ReciprocalErrorModel>)
                    .map_err(|e| ConfigError::Invalid(e.to_string()))
            }
            (None, SamplerConfig::Synthetic(p)) => Ok(Box::new(p.surrogate())),
            (None, SamplerConfig::External(_)) => Err(ConfigError::Invalid(
                "an external sampler needs a `reciprocal_error` model".into(),
            )),
        }
    }

    pub fn sampler(&self) -> Result<Box<dyn Sampler>, ConfigError> {
        match &self.sampler {
            SamplerConfig::Synthetic(p) => Ok(Box::new(SyntheticSampler::new(p.clone()))),
            SamplerConfig::External(e) => {
                let s = ExternalCommandSampler::new(e.template.clone(), &e.parser_regex)
                    .map_err(|err| ConfigError::Invalid(err.to_string()))?
                    .with_timeout(Duration::from_secs_f64(e.timeout_s));
                Ok(Box::new(s))
            }
        }
    }

    /// Default cap on concurrent measurements: one for external commands,
    /// unbounded for the synthetic sampler.
    pub fn default_jobs(&self) -> Option<usize> {
        match self.sampler {
            SamplerConfig::Synthetic(_) => None,
            SamplerConfig::External(_) => Some(1),
        }
    }
}
