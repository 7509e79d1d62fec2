use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use frachs_cli::{commands, export, ExperimentConfig, Format, Run, RunReport, Status};

#[derive(Parser)]
#[command(name = "frachs", version, about = "Fractional Hamiltonian system experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment config (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[arg(long, global = true, default_value = "./out")]
    out: PathBuf,

    /// Overrides the `seed` key of the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// json, csv or both.
    #[arg(long, global = true, default_value = "both")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Check the structural hypotheses on the instance.
    Check,
    /// Find one critical point by descent.
    Solve,
    /// Distinct solutions, minimax levels and their lower bounds.
    Multiplicity,
    /// Decay of the embedding constants β_j.
    Beta,
    /// Re-render a saved report.json.
    Export {
        #[arg(long)]
        report: PathBuf,
    },
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let path = cli.config.as_ref().context("--config is required for this command")?;
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut cfg = ExperimentConfig::parse(&text).with_context(|| format!("in {}", path.display()))?;
    if let Some(seed) = cli.seed {
        cfg.set_seed(seed);
    }
    Ok(cfg)
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("FRACHS_THREADS") {
        let n: usize = v.parse().with_context(|| format!("FRACHS_THREADS must be a positive integer, got `{v}`"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    }
    Ok(())
}

fn summarize(report: &RunReport) {
    for c in &report.conditions {
        let verdict = if c.passed { "pass" } else { "FAIL" };
        println!("{:<5} {verdict}  ({} samples, {} violations)", c.condition.to_string(), c.samples, c.violations);
    }
    for s in &report.solutions {
        println!(
            "solution {}  I = {:+.8e}  |r| = {:.2e}  |u|_X = {:.6e}  [{}]",
            s.index, s.energy.total, s.residual_norm, s.xalpha_norm, s.provenance.initializer
        );
    }
    for l in &report.c_hat {
        println!(
            "c_hat_{}  {:+.8e}  (delta {:.4e}, bound {:+.4e}: {})",
            l.estimate.j,
            l.estimate.c_hat,
            l.estimate.radius,
            l.lower_bound,
            if l.bound_holds { "ok" } else { "VIOLATED" }
        );
    }
    for b in &report.beta {
        match b.beta_doubled {
            Some(d) => println!("beta_{:<3} {:.8e}  (2J: {:.8e})", b.j, b.beta, d),
            None => println!("beta_{:<3} {:.8e}", b.j, b.beta),
        }
    }
    for f in &report.failures {
        println!("failed: {f}");
    }
}

fn run(cli: &Cli) -> Result<Status> {
    configure_threads()?;
    let Run { report, status } = match &cli.command {
        Command::Export { report } => {
            let text = fs::read_to_string(report).with_context(|| format!("reading {}", report.display()))?;
            let report = RunReport::from_json(&text)?;
            Run { report, status: Status::Passed }
        }
        Command::Check => commands::check(&load_config(cli)?)?,
        Command::Solve => commands::solve(&load_config(cli)?)?,
        Command::Multiplicity => commands::multiplicity(&load_config(cli)?)?,
        Command::Beta => commands::beta(&load_config(cli)?)?,
    };
    summarize(&report);
    for path in export(&report, &cli.out, cli.format)? {
        println!("wrote {}", path.display());
    }
    Ok(status)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(status) => ExitCode::from(status.code() as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
