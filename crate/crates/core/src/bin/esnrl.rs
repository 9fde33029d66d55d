//! Command-line front end for the experiment harness.

use clap::{Parser, Subcommand};
use esnrl::harness::{self, ExperimentConfig};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "esnrl", version, about = "Reservoir vs trainable memory for RL agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every configured model and write runs, curves and report.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's output_dir.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
        /// Overrides the config's base_seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Recompute curves/ from the run CSVs of a finished experiment.
    Aggregate {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Print trainable parameter counts per model.
    Params {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write the reservoir matrices of the ESN models to CSV.
    ExportWeights {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

const EXIT_CONFIG: u8 = 1;
const EXIT_OUTPUT: u8 = 2;
const EXIT_RUN: u8 = 3;

fn fail(code: u8, err: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(code)
}

fn load(path: &Path) -> Result<ExperimentConfig, ExitCode> {
    ExperimentConfig::load(path).map_err(|e| fail(EXIT_CONFIG, format!("{}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out, jobs, seed } => run(&config, out, jobs, seed),
        Command::Aggregate { input } => match harness::aggregate_dir(&input) {
            Ok(curves) => {
                for (model, curve) in curves {
                    println!("{model}: {} episodes", curve.len());
                }
                Ok(())
            }
            Err(e @ esnrl::Error::Io { .. }) => Err(fail(EXIT_OUTPUT, e)),
            Err(e) => Err(fail(EXIT_CONFIG, e)),
        },
        Command::Params { config } => load(&config).and_then(|cfg| {
            let sizes = cfg.model_sizes().map_err(|e| fail(EXIT_CONFIG, e))?;
            print!("{}", harness::format_parameter_table(cfg.task(), &sizes));
            Ok(())
        }),
        Command::ExportWeights { config, out } => load(&config).and_then(|cfg| {
            let dirs = harness::export_weights(&cfg, &out).map_err(|e| match e {
                esnrl::Error::Io { .. } => fail(EXIT_OUTPUT, e),
                e => fail(EXIT_CONFIG, e),
            })?;
            for d in dirs {
                println!("{}", d.display());
            }
            Ok(())
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}

fn run(path: &Path, out: Option<PathBuf>, jobs: Option<usize>, seed: Option<u64>) -> Result<(), ExitCode> {
    let mut cfg = load(path)?;
    if let Some(out) = out {
        cfg.output_dir = out;
    }
    if let Some(seed) = seed {
        cfg.base_seed = seed;
    }
    harness::check_writable(&cfg.output_dir).map_err(|e| fail(EXIT_OUTPUT, e))?;
    eprintln!(
        "{}: {} models x {} runs x {} episodes",
        cfg.task(),
        cfg.models.len(),
        cfg.runs_per_model,
        cfg.episodes()
    );
    let report = harness::run_experiment(&cfg, jobs).map_err(|e| fail(EXIT_RUN, e))?;
    harness::write_report(&report, &cfg.output_dir).map_err(|e| fail(EXIT_OUTPUT, e))?;
    for run in &report.runs {
        let rewards = run.rewards();
        let tail = &rewards[rewards.len().saturating_sub(cfg.smoothing_window)..];
        println!(
            "{} seed {}: final mean step reward {:.4}",
            run.model,
            run.seed,
            tail.iter().sum::<f64>() / tail.len() as f64
        );
    }
    println!("wrote {}", cfg.output_dir.display());
    Ok(())
}
