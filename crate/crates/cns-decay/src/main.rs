use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cns_decay::config::ExperimentKind;
use cns_decay::run::{execute, Invocation, EXIT_CONFIG};

#[derive(Parser)]
#[command(
    name = "cns-decay",
    version,
    about = "Decay-rate experiments for the 3D compressible Navier-Stokes perturbation system"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for random initial data (overrides `initial.seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, env = "CNS_DECAY_THREADS")]
    threads: Option<usize>,
    /// Exit with status 4 when any fit or check fails.
    #[arg(long, global = true)]
    check: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Continuum linear decay of the configured data.
    LinearDecay,
    /// Nonlinear run with energy diagnostics.
    Simulate,
    /// Coupled nonlinear and linear runs with the difference diagnostics.
    Difference,
    /// Re-fit the CSV files already in the output directory.
    Fit,
    /// Summarize a finished run.
    Report,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: threads: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    }
    let kind = match cli.command {
        Command::LinearDecay => ExperimentKind::LinearDecay,
        Command::Simulate => ExperimentKind::Simulate,
        Command::Difference => ExperimentKind::Difference,
        Command::Fit => ExperimentKind::Fit,
        Command::Report => ExperimentKind::Report,
    };
    let code = execute(&Invocation {
        kind,
        config: cli.config,
        out: cli.out,
        seed: cli.seed,
        check: cli.check,
    });
    ExitCode::from(code as u8)
}
