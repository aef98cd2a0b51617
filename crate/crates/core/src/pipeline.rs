//! End-to-end tuning: partition, frontier, adaptive sampling, modeling and
//! ranking, plus the offline variants used by `partition` and `predict`.

use std::collections::BTreeMap;

use log::{debug, info};
use rayon::prelude::*;
use thiserror::Error;

use crate::accuracy::{
    extract_frontier, partition_space, AccurateSubspace, AccuracyError, Frontier,
    ReciprocalErrorModel,
};
use crate::config::{BaselineConfig, ConfigError, TuneConfig};
use crate::modeling::{
    rank_frontier, segment_series, Basis, ModelError, PerfModel, PiecewiseModel, Prediction,
    RecipLevels,
};
use crate::param_space::{build_search_space, Configuration, GridSize, SpaceError, Variant};
use crate::report::{
    output_name, samples_csv, subspace_csv, BaselineReport, ChosenConfig, FrontierEntry,
    SampleRow, VariantReport,
};
use crate::sampling::{
    adaptive_sample, dynamic_recip_plan, median, AdaptiveParams, Phase, RecordingSampler,
    SampleRecord, Sampler, SamplerError, SamplingError, SAMPLING_ALPHA,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("search space: {0}")]
    Space(#[from] SpaceError),
    #[error("partition: {0}")]
    Accuracy(#[from] AccuracyError),
    #[error("sampling ({stage}): {source}")]
    Sampling {
        stage: String,
        #[source]
        source: SamplingError,
    },
    #[error("baseline sampling: {0}")]
    Baseline(#[source] SamplerError),
    #[error("modeling: {0}")]
    Model(#[from] ModelError),
    #[error("samples: {0}")]
    Samples(String),
    #[error("missing coverage: {0}")]
    MissingCoverage(String),
    #[error("writing output: {0}")]
    Io(#[from] std::io::Error),
}

impl PipelineError {
    /// Process exit code: 2 for bad input, 3 when nothing is accurate enough,
    /// 4 when the sampler fails, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Accuracy(AccuracyError::EmptyAccurateSubspace(_)) => 3,
            PipelineError::Config(_)
            | PipelineError::Space(_)
            | PipelineError::Accuracy(_)
            | PipelineError::Samples(_)
            | PipelineError::MissingCoverage(_) => 2,
            PipelineError::Sampling { .. } | PipelineError::Baseline(_) => 4,
            PipelineError::Model(_) | PipelineError::Io(_) => 1,
        }
    }
}

/// Everything produced for one variant.
#[derive(Debug, Clone)]
pub struct VariantOutcome {
    pub subspace: AccurateSubspace,
    pub frontier: Frontier,
    pub model: PerfModel,
    pub ranked: Vec<Prediction>,
    /// Raw measurements, sorted; empty when predicting from a file.
    pub samples: Vec<SampleRecord>,
    pub report: VariantReport,
}

impl VariantOutcome {
    pub fn chosen(&self) -> &Prediction {
        &self.ranked[0]
    }
}

/// Partition and frontier of one variant.
pub fn run_partition_variant(
    config: &TuneConfig,
    model: &dyn ReciprocalErrorModel,
    variant: Variant,
) -> Result<(AccurateSubspace, Frontier), PipelineError> {
    let space = build_search_space(&config.system, &config.ranges)?;
    info!(
        "{variant}: {} grids, {} performance points, {} configurations",
        space.grids.len(),
        space.perf_space_size(),
        space.logical_size()
    );
    let sub = partition_space(&space, &config.accuracy, model, variant)?;
    let frontier = extract_frontier(&sub);
    info!("{variant}: {} accurate points, {} on the frontier", sub.len(), frontier.len());
    Ok((sub, frontier))
}

pub fn run_partition(config: &TuneConfig) -> Result<Vec<(AccurateSubspace, Frontier)>, PipelineError> {
    let model = config.reciprocal_model()?;
    config
        .variants
        .iter()
        .map(|&v| run_partition_variant(config, model.as_ref(), v))
        .collect()
}

/// Output files of [`run_partition`], named per variant when there are several.
pub fn partition_files(parts: &[(AccurateSubspace, Frontier)]) -> Vec<(String, String)> {
    let multi = parts.len() > 1;
    parts
        .iter()
        .map(|(sub, frontier)| {
            (output_name("subspace", "csv", sub.variant, multi), subspace_csv(sub, frontier))
        })
        .collect()
}

/// Output files of [`run_tune`] or [`run_predict`].
pub fn tune_files(outcomes: &[VariantOutcome], with_samples: bool) -> Vec<(String, String)> {
    let multi = outcomes.len() > 1;
    let mut files = Vec::new();
    for o in outcomes {
        let v = o.report.variant;
        files.push((output_name("report", "json", v, multi), o.report.to_json()));
        files.push((output_name("frontier", "csv", v, multi), o.report.frontier_csv()));
        if with_samples {
            files.push((output_name("samples", "csv", v, multi), samples_csv(&o.samples)));
        }
    }
    files
}

/// Number of threads for sampling passes: `jobs`, else the config default,
/// and one when the sampler is not thread-safe.
fn thread_count(config: &TuneConfig, sampler: &dyn Sampler, jobs: Option<usize>) -> Option<usize> {
    if !sampler.concurrent() {
        return Some(1);
    }
    jobs.or(config.default_jobs()).map(|j| j.max(1))
}

/// One adaptive sampling pass over strictly increasing positions.
struct Pass {
    label: String,
    basis: Basis,
    phase: Phase,
    xs: Vec<f64>,
    configs: Vec<Configuration>,
}

impl Pass {
    fn run(
        &self,
        sampler: &dyn Sampler,
        params: &AdaptiveParams,
        timesteps: u32,
        tolerance: f64,
    ) -> Result<PiecewiseModel, PipelineError> {
        let measure = |i: usize, r: u32| sampler.measure(&self.configs[i], self.phase, timesteps, r);
        let sampled: Vec<(f64, f64)> = if self.xs.len() == 1 {
            let raw = (0..params.repeats_per_point)
                .map(|r| measure(0, r))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|source| PipelineError::Sampling {
                    stage: self.label.clone(),
                    source: SamplingError::SamplerFailure { index: 0, x: self.xs[0], source },
                })?;
            vec![(self.xs[0], median(&raw))]
        } else {
            adaptive_sample(&self.xs, self.basis, params, measure)
                .map_err(|source| PipelineError::Sampling { stage: self.label.clone(), source })?
                .into_iter()
                .map(|(i, t)| (self.xs[i], t))
                .collect()
        };
        debug!("{}: {} positions sampled of {}", self.label, sampled.len(), self.xs.len());
        fit_series(&sampled, self.basis, tolerance)
    }
}

fn fit_series(points: &[(f64, f64)], basis: Basis, tolerance: f64) -> Result<PiecewiseModel, PipelineError> {
    match points {
        [(x, t)] => Ok(PiecewiseModel::constant(basis, *x, *t)),
        _ => Ok(segment_series(points, basis, tolerance)?),
    }
}

/// Grids with distinct point counts, keeping the first shape of each count.
fn distinct_positions(grids: &[GridSize]) -> Vec<GridSize> {
    let mut out: Vec<GridSize> = Vec::with_capacity(grids.len());
    for &g in grids {
        if out.last().map_or(true, |l| l.points() < g.points()) {
            out.push(g);
        }
    }
    out
}

fn build_report(
    sub: &AccurateSubspace,
    ranked: &[Prediction],
    samples_used: usize,
    wall_time_s: f64,
    baseline: Option<BaselineReport>,
) -> VariantReport {
    let best = &ranked[0];
    VariantReport {
        variant: sub.variant,
        chosen: ChosenConfig {
            alpha: best.chosen_alpha,
            cutoff: best.cutoff,
            order: best.order,
            grid: best.grid,
        },
        predicted_seconds: best.est_seconds,
        alpha_interval: [best.alpha_interval.0, best.alpha_interval.1],
        frontier: ranked
            .iter()
            .enumerate()
            .map(|(i, p)| FrontierEntry {
                rank: i + 1,
                predicted_seconds: p.est_seconds,
                alpha: p.chosen_alpha,
                alpha_interval: [p.alpha_interval.0, p.alpha_interval.1],
                cutoff: p.cutoff,
                order: p.order,
                grid: p.grid,
                extrapolated: p.extrapolated,
            })
            .collect(),
        samples_used,
        wall_time_s,
        baseline,
    }
}

fn predicted_baseline(b: &BaselineConfig, model: &PerfModel) -> Option<f64> {
    model.estimate(b.cutoff, b.grid, b.order).ok().map(|e| e.seconds)
}

fn measure_total(
    sampler: &dyn Sampler,
    config: &Configuration,
    timesteps: u32,
    repeats: u32,
) -> Result<f64, PipelineError> {
    let raw = (0..repeats)
        .map(|r| sampler.measure(config, Phase::Total, timesteps, r))
        .collect::<Result<Vec<_>, _>>()
        .map_err(PipelineError::Baseline)?;
    Ok(median(&raw))
}

/// Full tuning run for one variant.
pub fn tune_variant(
    config: &TuneConfig,
    sampler: &dyn Sampler,
    model: &dyn ReciprocalErrorModel,
    variant: Variant,
    jobs: Option<usize>,
) -> Result<VariantOutcome, PipelineError> {
    let (sub, frontier) = run_partition_variant(config, model, variant)?;
    let plan = dynamic_recip_plan(&sub);
    let space = &sub.space;
    let timesteps = config.system.timesteps_per_sample;
    let tolerance = config.adaptive.rel_error_threshold;

    let real = Pass {
        label: "real space".into(),
        basis: Basis::Cubic,
        phase: Phase::RealSpace,
        xs: plan.real_cutoffs.clone(),
        configs: plan
            .real_cutoffs
            .iter()
            .map(|&cutoff| Configuration {
                alpha: SAMPLING_ALPHA,
                cutoff,
                order: space.orders[0],
                grid: GridSize::UNIT,
                variant,
            })
            .collect(),
    };
    let mut passes = vec![real];
    for rp in &plan.passes {
        let grids = distinct_positions(&rp.grids);
        passes.push(Pass {
            label: format!("reciprocal space, order {}, cutoff {:.2}", rp.order, rp.cutoff),
            basis: Basis::Linear,
            phase: Phase::ReciprocalSpace,
            xs: grids.iter().map(|g| g.points() as f64).collect(),
            configs: grids
                .iter()
                .map(|&grid| Configuration {
                    alpha: SAMPLING_ALPHA,
                    cutoff: rp.cutoff,
                    order: rp.order,
                    grid,
                    variant,
                })
                .collect(),
        });
    }

    let recorder = RecordingSampler::new(sampler);
    let run_all = || -> Result<Vec<PiecewiseModel>, PipelineError> {
        passes
            .par_iter()
            .map(|p| p.run(&recorder, &config.adaptive, timesteps, tolerance))
            .collect()
    };
    let fits = match thread_count(config, sampler, jobs) {
        Some(1) => passes
            .iter()
            .map(|p| p.run(&recorder, &config.adaptive, timesteps, tolerance))
            .collect::<Result<Vec<_>, _>>()?,
        threads => rayon::ThreadPoolBuilder::new()
            .num_threads(threads.unwrap_or(0))
            .build()
            .map_err(|e| PipelineError::Io(std::io::Error::other(e)))?
            .install(run_all)?,
    };

    let mut fits = fits.into_iter();
    let real_model = fits.next().expect("real-space pass");
    let mut recip_models: BTreeMap<u32, RecipLevels> = BTreeMap::new();
    let mut per_order: BTreeMap<u32, Vec<PiecewiseModel>> = BTreeMap::new();
    for (rp, fit) in plan.passes.iter().zip(fits) {
        per_order.entry(rp.order).or_default().push(fit);
    }
    for (order, mut levels) in per_order {
        let at_rc_max = levels.pop().expect("one pass per level");
        let at_rc_min = levels.pop().unwrap_or_else(|| at_rc_max.clone());
        recip_models.insert(order, RecipLevels { at_rc_min, at_rc_max });
    }
    let (rc_min, rc_max) = sub.cutoff_range().expect("nonempty subspace");
    let model = PerfModel { real_model, recip_models, rc_min, rc_max, n_procs: config.system.n_procs };
    let ranked = rank_frontier(&frontier, &sub, &model)?;

    let baseline = match &config.baseline {
        Some(b) => {
            let reps = config.adaptive.repeats_per_point;
            let base_cfg =
                Configuration { alpha: b.alpha, cutoff: b.cutoff, order: b.order, grid: b.grid, variant };
            let best = &ranked[0];
            let chosen_cfg = Configuration {
                alpha: best.chosen_alpha,
                cutoff: best.cutoff,
                order: best.order,
                grid: best.grid,
                variant,
            };
            let empirical = measure_total(&recorder, &base_cfg, timesteps, reps)?;
            let chosen_empirical = measure_total(&recorder, &chosen_cfg, timesteps, reps)?;
            Some(BaselineReport {
                config: ChosenConfig::from(&base_cfg),
                predicted_seconds: predicted_baseline(b, &model),
                empirical_seconds: Some(empirical),
                chosen_empirical_seconds: Some(chosen_empirical),
                speedup: Some(empirical / chosen_empirical),
            })
        }
        None => None,
    };

    let samples = recorder.records();
    let wall_time_s = samples.iter().map(|r| r.seconds).sum();
    info!("{variant}: {} sampler invocations", samples.len());
    let report = build_report(&sub, &ranked, samples.len(), wall_time_s, baseline);
    Ok(VariantOutcome { subspace: sub, frontier, model, ranked, samples, report })
}

/// Tunes every configured variant with the given sampler.
pub fn run_tune(
    config: &TuneConfig,
    sampler: &dyn Sampler,
    jobs: Option<usize>,
) -> Result<Vec<VariantOutcome>, PipelineError> {
    let model = config.reciprocal_model()?;
    config
        .variants
        .iter()
        .map(|&v| tune_variant(config, sampler, model.as_ref(), v, jobs))
        .collect()
}

/// Median seconds per distinct position, ascending.
fn median_series(mut pairs: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = Vec::new();
    let mut i = 0;
    while i < pairs.len() {
        let x = pairs[i].0;
        let j = pairs[i..].iter().position(|p| p.0 != x).map_or(pairs.len(), |k| i + k);
        let ts: Vec<f64> = pairs[i..j].iter().map(|p| p.1).collect();
        out.push((x, median(&ts)));
        i = j;
    }
    out
}

/// Models fitted from recorded samples.
///
/// Real-space rows give the cutoff model. For each order, reciprocal rows at
/// the order's smallest and largest sampled cutoff give the two levels.
pub fn model_from_samples(
    rows: &[SampleRow],
    orders: &[u32],
    tolerance: f64,
    n_procs: u32,
) -> Result<PerfModel, PipelineError> {
    let real: Vec<(f64, f64)> =
        rows.iter().filter(|r| r.phase == Phase::RealSpace).map(|r| (r.cutoff, r.seconds)).collect();
    if real.is_empty() {
        return Err(PipelineError::MissingCoverage("no real-space samples".into()));
    }
    let real_model = fit_series(&median_series(real), Basis::Cubic, tolerance)?;

    let mut recip_models = BTreeMap::new();
    let (mut rc_min, mut rc_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &order in orders {
        let of_order: Vec<&SampleRow> = rows
            .iter()
            .filter(|r| r.phase == Phase::ReciprocalSpace && r.order == order)
            .collect();
        let lo = of_order.iter().map(|r| r.cutoff).fold(f64::INFINITY, f64::min);
        let hi = of_order.iter().map(|r| r.cutoff).fold(f64::NEG_INFINITY, f64::max);
        if of_order.is_empty() {
            return Err(PipelineError::MissingCoverage(format!(
                "no reciprocal-space samples for order {order}"
            )));
        }
        let level = |cutoff: f64| {
            let pairs = of_order
                .iter()
                .filter(|r| r.cutoff == cutoff)
                .map(|r| (r.grid().points() as f64, r.seconds))
                .collect();
            fit_series(&median_series(pairs), Basis::Linear, tolerance)
        };
        recip_models.insert(order, RecipLevels { at_rc_min: level(lo)?, at_rc_max: level(hi)? });
        rc_min = rc_min.min(lo);
        rc_max = rc_max.max(hi);
    }
    Ok(PerfModel { real_model, recip_models, rc_min, rc_max, n_procs })
}

/// Ranks the frontier of every variant from recorded samples, without
/// invoking a sampler.
pub fn run_predict(config: &TuneConfig, rows: &[SampleRow]) -> Result<Vec<VariantOutcome>, PipelineError> {
    let error_model = config.reciprocal_model()?;
    let wall_time_s: f64 = rows.iter().map(|r| r.seconds).sum();
    config
        .variants
        .iter()
        .map(|&variant| {
            let (sub, frontier) = run_partition_variant(config, error_model.as_ref(), variant)?;
            let mut orders: Vec<u32> = frontier.points.iter().map(|p| p.order).collect();
            orders.sort_unstable();
            orders.dedup();
            let model = model_from_samples(
                rows,
                &orders,
                config.adaptive.rel_error_threshold,
                config.system.n_procs,
            )?;
            let ranked = rank_frontier(&frontier, &sub, &model)?;
            let baseline = config.baseline.as_ref().map(|b| {
                let predicted = predicted_baseline(b, &model);
                BaselineReport {
                    config: ChosenConfig { alpha: b.alpha, cutoff: b.cutoff, order: b.order, grid: b.grid },
                    predicted_seconds: predicted,
                    empirical_seconds: None,
                    chosen_empirical_seconds: None,
                    speedup: predicted.map(|p| p / ranked[0].est_seconds),
                }
            });
            let report = build_report(&sub, &ranked, rows.len(), wall_time_s, baseline);
            Ok(VariantOutcome { subspace: sub, frontier, model, ranked, samples: Vec::new(), report })
        })
        .collect()
}
