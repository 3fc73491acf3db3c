//! `gpsmc` command-line interface.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gpsmc::io::{execute, RunConfig, Task};
use gpsmc::Error;

#[derive(Parser)]
#[command(name = "gpsmc", version, about = "GP regression with hyperparameters marginalized by an SMC sampler")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Sample the hyperparameter posterior (or run the configured baseline).
    Sample(Args),
    /// Sample, then write the mixture predictive and test metrics.
    Predict(Args),
    /// Repeat several methods and report run-to-run dispersion.
    Compare(Args),
    /// Online change-point detection over a univariate series.
    Changepoint(Args),
}

#[derive(clap::Args)]
struct Args {
    /// JSON run config, or a manifest.json from an earlier run.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Sampler preset: default, sarcos or changepoint.
    #[arg(long)]
    preset: Option<String>,
}

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_IO: u8 = 1;

fn run(task: Task, args: Args) -> Result<(), Error> {
    let mut cfg = RunConfig::load(&args.config)?;
    if cfg.task != task {
        return Err(Error::Config(format!(
            "config is for task `{:?}` but the `{:?}` command was used",
            cfg.task, task
        )));
    }
    cfg.finalize(args.seed, args.preset.as_deref())?;
    let outcome = execute(cfg, args.out.as_deref())?;
    for f in &outcome.files {
        println!("{}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (task, args) = match cli.verb {
        Verb::Sample(a) => (Task::Sample, a),
        Verb::Predict(a) => (Task::Predict, a),
        Verb::Compare(a) => (Task::Compare, a),
        Verb::Changepoint(a) => (Task::Changepoint, a),
    };
    match run(task, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                _ if e.is_config_error() => EXIT_CONFIG,
                Error::Io(_) => EXIT_IO,
                _ => EXIT_NUMERIC,
            };
            ExitCode::from(code)
        }
    }
}
