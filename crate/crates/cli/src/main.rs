use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use csbp_core::study::{emit, run_study, Scenario, StudyConfig};

/// Monte Carlo studies of branching populations with interaction.
#[derive(Parser, Debug)]
#[command(name = "csbp", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Rescaled population paths, moment and quadratic-variation checks.
    Simulate(RunArgs),
    /// Monotone coupling of populations started from ordered masses.
    Couple(RunArgs),
    /// Euler scheme for the limit equation with a martingale-problem check.
    Sde(RunArgs),
    /// Forest contours, the local-time identity and direct contour law.
    Contour(RunArgs),
    /// Distance in law between rescaled populations and the limit.
    Converge(RunArgs),
    /// Reweighting of contours without interaction.
    Girsanov(RunArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Study configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Master seed, overriding the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, overriding the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads, overriding the configuration.
    #[arg(long, env = "CSBP_WORKERS")]
    workers: Option<usize>,
}

impl Command {
    fn split(&self) -> (Scenario, &RunArgs) {
        match self {
            Command::Simulate(a) => (Scenario::Population, a),
            Command::Couple(a) => (Scenario::Coupled, a),
            Command::Sde(a) => (Scenario::Sde, a),
            Command::Contour(a) => (Scenario::Contour, a),
            Command::Converge(a) => (Scenario::Converge, a),
            Command::Girsanov(a) => (Scenario::Girsanov, a),
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let (scenario, args) = cli.command.split();
    let mut config = StudyConfig::load(&args.config)?;
    if config.scenario != scenario {
        bail!(
            "{} describes a `{}` study, not `{}`",
            args.config.display(),
            config.scenario.name(),
            scenario.name()
        );
    }
    if let Some(seed) = args.seed {
        config.mc.master_seed = seed;
    }
    if let Some(out) = &args.out {
        config.output.directory = out.clone();
    }
    if let Some(w) = args.workers {
        config.mc.worker_count = w;
    }
    config.validate()?;

    let output = run_study(&config).context("study failed")?;
    let manifest = emit(&output, &config.output.directory, &config.output.formats)?;
    let report = &output.report;
    for c in &report.checks {
        println!(
            "{} {}: {} (tolerance {}; {})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.tolerance,
            c.rule
        );
    }
    if report.failures.count > 0 {
        eprintln!("{} paths failed", report.failures.count);
        for (i, msg) in &report.failures.examples {
            eprintln!("  path {i}: {msg}");
        }
    }
    println!(
        "wrote {} data files to {}",
        manifest.data_files.len(),
        config.output.directory.display()
    );
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
