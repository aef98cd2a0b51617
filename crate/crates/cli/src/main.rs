use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use paretune::config::TuneConfig;
use paretune::pipeline::{
    partition_files, run_partition, run_predict, run_tune, tune_files, PipelineError, VariantOutcome,
};
use paretune::report::{read_samples_file, write_files};

#[derive(Parser)]
#[command(name = "paretune", version, about = "Accuracy-constrained parameter tuning for mesh-Ewald solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the target, fit cost models and pick the fastest accurate configuration.
    Tune {
        config: PathBuf,
        /// Maximum number of concurrent sampler invocations.
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the accurate subspace without sampling.
    Partition {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank the frontier from a previously recorded samples CSV.
    Predict {
        config: PathBuf,
        samples: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn out_dir(config: &TuneConfig, out: Option<PathBuf>) -> PathBuf {
    out.or_else(|| config.output.dir.as_ref().map(|d| config.base_dir.join(d)))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn print_summary(outcomes: &[VariantOutcome], dir: &Path) {
    for o in outcomes {
        let r = &o.report;
        let c = &r.chosen;
        println!(
            "{}: alpha={} cutoff={} order={} grid={} predicted={:.4} s (alpha in [{}, {}])",
            r.variant,
            c.alpha,
            c.cutoff,
            c.order,
            c.grid,
            r.predicted_seconds,
            r.alpha_interval[0],
            r.alpha_interval[1]
        );
        println!(
            "{}: {} accurate points, frontier of {}, {} samples, {:.2} s sampled",
            r.variant,
            o.subspace.len(),
            r.frontier.len(),
            r.samples_used,
            r.wall_time_s
        );
        if let Some(b) = &r.baseline {
            if let Some(s) = b.speedup {
                println!("{}: speedup over baseline {:.2}x", r.variant, s);
            }
        }
    }
    println!("reports written to {}", dir.display());
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    let started = Instant::now();
    match cli.command {
        Command::Tune { config, jobs, out } => {
            let config = TuneConfig::from_path(&config)?;
            let sampler = config.sampler()?;
            let outcomes = run_tune(&config, sampler.as_ref(), jobs)?;
            let dir = out_dir(&config, out);
            write_files(&dir, &tune_files(&outcomes, true))?;
            print_summary(&outcomes, &dir);
        }
        Command::Partition { config, out } => {
            let config = TuneConfig::from_path(&config)?;
            let parts = run_partition(&config)?;
            let dir = out_dir(&config, out);
            write_files(&dir, &partition_files(&parts))?;
            for (sub, frontier) in &parts {
                println!(
                    "{}: {} of {} performance points accurate, {} on the frontier",
                    sub.variant,
                    sub.len(),
                    sub.space.perf_space_size(),
                    frontier.len()
                );
            }
            println!("subspace written to {}", dir.display());
        }
        Command::Predict { config, samples, out } => {
            let config = TuneConfig::from_path(&config)?;
            let rows = read_samples_file(&samples).map_err(PipelineError::Samples)?;
            let outcomes = run_predict(&config, &rows)?;
            let dir = out_dir(&config, out);
            write_files(&dir, &tune_files(&outcomes, false))?;
            print_summary(&outcomes, &dir);
        }
    }
    println!("elapsed {:.2} s", started.elapsed().as_secs_f64());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
