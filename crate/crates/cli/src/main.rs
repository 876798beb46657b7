//! `fountain-swarm`: run seeded swarm experiments and write CSV series.
//!
//! Without a subcommand, runs one scenario (or a custom configuration) for
//! the requested number of replicates. `sweep` measures the stable fraction
//! over a grid of `k` and `λ`.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use fountain_swarm::experiment::{self, ExperimentSpec, RunOptions};
use fountain_swarm::PolicyConfig;

#[derive(Parser, Debug)]
#[command(
    name = "fountain-swarm",
    version,
    about = "Slotted P2P swarm simulator"
)]
#[command(args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Stable fraction for every (k, lambda) pair.
    Sweep(SweepArgs),
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// `key = value` file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in scenario: fig3, fig4, fig4-fountain, fig5, fig6, adaptive-ramp.
    #[arg(long)]
    scenario: Option<String>,
    /// baseline, fountain-only, prioritize-only or proposed.
    #[arg(long)]
    policy: Option<PolicyConfig>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    /// Server coefficient pool size (0 draws fresh coefficients each time).
    #[arg(long = "K")]
    pool_size: Option<usize>,
    #[arg(long)]
    slots: Option<u64>,
    /// Population above which a run counts as diverged.
    #[arg(long)]
    threshold: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<u64>,
    /// Enable adaptive k with this window length in slots.
    #[arg(long)]
    tau: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    k_values: Vec<usize>,
    #[arg(long, value_delimiter = ',', required = true)]
    lambdas: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    replicates: u64,
    #[arg(long, default_value_t = 50_000)]
    slots: u64,
    #[arg(long, default_value = "proposed")]
    policy: PolicyConfig,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn options(&self) -> Result<RunOptions> {
        let file = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                RunOptions::parse(&text).with_context(|| format!("in config {}", path.display()))?
            }
            None => RunOptions::default(),
        };
        let flags = RunOptions {
            scenario: self.scenario.clone(),
            policy: self.policy,
            lambda: self.lambda,
            k: self.k,
            pool_size: self.pool_size,
            slots: self.slots,
            threshold: self.threshold,
            seed: self.seed,
            replicates: self.replicates,
            tau: self.tau,
            out: self.out.clone(),
        };
        Ok(file.overlay(flags))
    }
}

fn run(args: &RunArgs) -> Result<()> {
    let spec = ExperimentSpec::from_options(&args.options()?)?;
    let summaries = experiment::run_matrix(&spec)?;
    for s in &summaries {
        println!("{}", serde_json::to_string(s)?);
    }
    eprintln!(
        "wrote {} runs to {}",
        summaries.len(),
        spec.out_dir.display()
    );
    Ok(())
}

fn sweep(args: &SweepArgs) -> Result<()> {
    let base = fountain_swarm::SimConfig {
        policy: args.policy,
        max_slots: args.slots,
        seed: args.seed,
        ..Default::default()
    };
    let table = experiment::sweep_boundary(
        &base,
        &args.k_values,
        &args.lambdas,
        args.replicates,
        args.out.as_deref(),
    )?;
    print!("{}", table.to_csv());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Some(Command::Sweep(args)) => sweep(args),
        None => run(&cli.run),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
