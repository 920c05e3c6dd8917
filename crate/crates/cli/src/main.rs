//! `crashdecomp` batch pipeline: generate data, extract labels, train,
//! evaluate, sweep and probe loss landscapes. Every command writes its
//! artifacts plus a `manifest.json` into one output directory.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{eval, gen_data, labels, landscape, sweep, train, Ctx};

#[derive(Debug, Parser)]
#[command(name = "crashdecomp", version, about = "Rigid-deformation decomposition of crash node trajectories")]
struct Cli {
    /// Directory under which default output directories are created.
    #[arg(long, global = true, env = "CRASHDECOMP_OUTPUT_ROOT", default_value = "runs")]
    output_root: PathBuf,

    /// JSON file with per-command sections; flags take precedence over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for scenario- or configuration-level parallelism.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    /// Replace a non-empty output directory.
    #[arg(long, global = true)]
    overwrite: bool,

    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate the synthetic scenario set.
    GenData(gen_data::Args),
    /// Extract rigid-motion labels and residuals with Kabsch alignment.
    ExtractLabels(labels::Args),
    /// Train a proposed, unified or oracle model.
    Train(train::Args),
    /// Evaluate a trained run on one split.
    Eval(eval::Args),
    /// Random hyperparameter sweep of a unified baseline.
    Sweep(sweep::Args),
    /// Loss-surface plane or pairwise seed interpolation.
    Landscape(landscape::Args),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = Ctx::new(cli.output_root, cli.config, cli.jobs, cli.overwrite).and_then(|ctx| match cli.command {
        Command::GenData(a) => gen_data::run(&ctx, a),
        Command::ExtractLabels(a) => labels::run(&ctx, a),
        Command::Train(a) => train::run(&ctx, a),
        Command::Eval(a) => eval::run(&ctx, a),
        Command::Sweep(a) => sweep::run(&ctx, a),
        Command::Landscape(a) => landscape::run(&ctx, a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
