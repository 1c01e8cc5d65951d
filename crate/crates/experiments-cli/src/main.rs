use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use experiments_cli::{run_experiment, ExperimentConfig, ExperimentKind, RunStatus};

/// Virtual bench for a 4x4 programmable photonic mesh: train it into a
/// switch, a MIMO descrambler or a tunable filter, and export the reports.
#[derive(Parser)]
#[command(name = "mesh-lab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a multichannel optical switch and report its crosstalk.
    Switch(RunArgs),
    /// Descramble a randomly mixed link back to clean channels.
    Mimo(RunArgs),
    /// Descramble with live traffic, feeding back eye-opening areas.
    MimoEye(RunArgs),
    /// Shape the transmission spectrum into a bandpass filter.
    Filter(RunArgs),
    /// Measure per-pair transmission spectra of a saved chip state.
    Sweep(RunArgs),
    /// Generate a standalone NRZ eye diagram (no chip involved).
    EyeSim(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Flat TOML experiment description; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config's global seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the acceptance rule: greedy | paper.
    #[arg(long, value_parser = ["greedy", "paper"])]
    acceptance_rule: Option<String>,
}

fn load_config(args: &RunArgs) -> Result<ExperimentConfig, experiments_cli::RunError> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_path(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    if let Some(rule) = &args.acceptance_rule {
        cfg.acceptance_rule = rule.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match &cli.command {
        Command::Switch(a) => (ExperimentKind::Switch, a),
        Command::Mimo(a) => (ExperimentKind::Mimo, a),
        Command::MimoEye(a) => (ExperimentKind::MimoEye, a),
        Command::Filter(a) => (ExperimentKind::Filter, a),
        Command::Sweep(a) => (ExperimentKind::Sweep, a),
        Command::EyeSim(a) => (ExperimentKind::EyeSim, a),
    };

    let cfg = match load_config(args) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };

    match run_experiment(kind, &cfg) {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            match outcome.status {
                RunStatus::Converged => ExitCode::SUCCESS,
                RunStatus::Flagged => ExitCode::from(2),
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
