//! `soliton-lab`: run lattice, spectral, scattering and ZS-AKNS experiments from the command line.

mod artifacts;
mod commands;
mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use soliton_lab::experiments::EXPERIMENTS;

use crate::config::ExperimentConfig;

#[derive(Debug, Parser)]
#[command(name = "soliton-lab", version, about = "Soliton laboratory experiments")]
struct Cli {
    /// Print the experiments accepted by `run` and exit.
    #[arg(long)]
    list_experiments: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// FPU lattice from a single normal mode; CSV of mode energies.
    Fpu(commands::FpuArgs),
    /// Split-step evolution of kdv-zk, kdv, burgers or nls.
    Pde(commands::PdeArgs),
    /// Direct scattering of a Schrödinger potential.
    Scatter(commands::ScatterArgs),
    /// Inverse scattering reconstruction at time t.
    Ist(commands::IstArgs),
    /// ZS-AKNS operations: recursion, zcc, dress, scatter.
    Akns(commands::AknsArgs),
    /// Run a configured experiment and write a manifest.
    Run(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// JSON config with `experiment`, `parameters`, `output_dir` and `seed`.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Experiment name; overrides the config file.
    #[arg(long)]
    experiment: Option<String>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Parameter override, repeatable; the value is parsed as JSON when possible.
    #[arg(long = "set", value_name = "NAME=VALUE")]
    set: Vec<String>,
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("SOLITON_LAB_THREADS") {
        let n: usize = v.trim().parse().with_context(|| format!("SOLITON_LAB_THREADS='{v}' is not a thread count"))?;
        if n > 0 {
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("thread pool")?;
        }
    }
    Ok(())
}

fn run_config(a: &RunArgs) -> Result<bool> {
    let mut cfg = match (&a.config, &a.experiment) {
        (Some(path), _) => ExperimentConfig::from_file(path)?,
        (None, Some(name)) => ExperimentConfig::new(name),
        (None, None) => anyhow::bail!("run needs --config or --experiment"),
    };
    if let Some(name) = &a.experiment {
        cfg.experiment = name.clone();
    }
    if let Some(dir) = &a.output_dir {
        cfg.output_dir = dir.clone();
    }
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    for s in &a.set {
        cfg.set(s)?;
    }
    let summary = run::run(&cfg)?;
    for c in &summary.checks {
        let value = c.value.map_or("none".to_string(), artifacts::number);
        let verdict = if c.pass { "PASS" } else { "FAIL" };
        println!("{verdict} {}: {value} (need {} {})", c.name, c.comparison, artifacts::number(c.tolerance));
    }
    println!("manifest: {}", summary.manifest.display());
    Ok(summary.checks.iter().all(|c| c.pass))
}

fn dispatch(cli: &Cli) -> Result<bool> {
    configure_threads()?;
    if cli.list_experiments {
        for e in EXPERIMENTS {
            println!("{e}");
        }
        return Ok(true);
    }
    let files = match &cli.command {
        Some(Command::Fpu(a)) => commands::fpu(a)?,
        Some(Command::Pde(a)) => commands::pde_run(a)?,
        Some(Command::Scatter(a)) => commands::scatter(a)?,
        Some(Command::Ist(a)) => commands::ist(a)?,
        Some(Command::Akns(a)) => commands::akns(a)?,
        Some(Command::Run(a)) => return run_config(a),
        None => anyhow::bail!("no subcommand given (see --help)"),
    };
    for f in files {
        println!("{}", f.display());
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
