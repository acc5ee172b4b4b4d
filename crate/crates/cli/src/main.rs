//! Experiment orchestration binary: reads a flat TOML configuration, runs
//! one pipeline action, and writes CSV artifacts plus a JSON report into a
//! locked output directory. Exit codes: 0 success, 1 configuration error,
//! 2 numerical failure (partial outputs are removed on failure).

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{Action, CommandError};
use config::ExperimentConfig;
use output::OutputDir;

#[derive(Parser)]
#[command(name = "obslab", version, about = "Inverse-problems experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Path to the flat TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` from the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed override for this run.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for sweep rows (results are thread-count independent).
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Run the reference forward model and record its boundary trace.
    Forward(RunArgs),
    /// Round-trip a known profile through convolution and deconvolution.
    Deconvolve(RunArgs),
    /// Recover a wave source from one boundary measurement.
    InvertSource(RunArgs),
    /// Recover a heat potential from spectral probe measurements.
    InvertPotential(RunArgs),
    /// Recover damping (volume or boundary, by problem) from measurements.
    InvertDamping(RunArgs),
    /// Evaluate the supporting inequality ledger on the configured grids.
    VerifyInequalities(RunArgs),
    /// Run an amplitude sweep and record distance/error rows.
    StabilitySweep(RunArgs),
    /// Run a sweep and certify it against a stability modulus.
    Certify(RunArgs),
}

impl Command {
    fn split(&self) -> (Action, &RunArgs) {
        match self {
            Command::Forward(a) => (Action::Forward, a),
            Command::Deconvolve(a) => (Action::Deconvolve, a),
            Command::InvertSource(a) => (Action::InvertSource, a),
            Command::InvertPotential(a) => (Action::InvertPotential, a),
            Command::InvertDamping(a) => (Action::InvertDamping, a),
            Command::VerifyInequalities(a) => (Action::VerifyInequalities, a),
            Command::StabilitySweep(a) => (Action::StabilitySweep, a),
            Command::Certify(a) => (Action::Certify, a),
        }
    }
}

fn run(cli: &Cli) -> Result<PathBuf, CommandError> {
    let (action, args) = cli.command.split();
    let text = std::fs::read_to_string(&args.config).map_err(|e| {
        CommandError::Config(format!("cannot read {}: {e}", args.config.display()))
    })?;
    let mut config = ExperimentConfig::parse(&text).map_err(CommandError::Config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(out) = &args.out {
        config.output_dir = out.display().to_string();
    }
    if args.threads == 0 {
        return Err(CommandError::Config("threads: must be positive".into()));
    }
    let root = PathBuf::from(&config.output_dir);
    let mut out = OutputDir::create(&root).map_err(CommandError::Config)?;
    let canonical = config.serialize();
    let config_value = serde_json::to_value(&config)
        .map_err(|e| CommandError::Config(format!("config serialization failed: {e}")))?;
    match commands::run(action, &config, &mut out, args.threads) {
        Ok(sections) => {
            let report = out
                .write_report(
                    &canonical,
                    config_value,
                    sections.results,
                    sections.certificates,
                    sections.diagnostics,
                )
                .map_err(CommandError::Config);
            match report {
                Ok(path) => {
                    out.finish();
                    Ok(path)
                }
                Err(e) => {
                    out.abort();
                    Err(e)
                }
            }
        }
        Err(e) => {
            out.abort();
            Err(e)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            println!("wrote {}", report.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            match e {
                CommandError::Config(_) => ExitCode::from(1),
                CommandError::Numerical(_) => ExitCode::from(2),
            }
        }
    }
}
