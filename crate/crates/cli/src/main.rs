//! `netsel`: run network model selection experiments from a TOML config.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use netsel::experiment::{
    run_experiment, stage_evaluate, stage_infer, stage_ingest, stage_report, stage_select, stage_synth,
    ExperimentConfig,
};

#[derive(Parser, Debug)]
#[command(name = "netsel", version, about = "Task-focused network model selection")]
struct Cli {
    /// Experiment config file.
    #[arg(long, global = true, default_value = "experiment.toml")]
    config: PathBuf,
    /// Worker threads (overrides the config).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Experiment seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Fail on the first malformed input line instead of skipping it.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Generate the synthetic dataset (no-op for event data).
    Synth,
    /// Partition events by time and derive labels.
    Ingest,
    /// Build network models and communities.
    Infer,
    /// Run every grid config; writes batches and results.csv.
    Evaluate,
    /// Selection tables from results.csv.
    Select,
    /// Regenerate every table from cached batches.
    Report,
    /// All stages in order.
    Run,
}

fn load(cli: &Cli) -> netsel::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&cli.config)?;
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(out) = &cli.out {
        // Relative to the working directory, not the config.
        cfg.out_dir = std::path::absolute(out).unwrap_or_else(|_| out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: &Cli) -> netsel::Result<()> {
    let cfg = load(cli)?;
    match cli.command {
        Command::Synth => stage_synth(&cfg),
        Command::Ingest => {
            let d = stage_ingest(&cfg, cli.strict)?;
            if d.rejected > 0 {
                log::warn!("skipped {} malformed event lines", d.rejected);
            }
            println!("{} events, {} nodes", d.accepted, d.parts.n_nodes);
            Ok(())
        }
        Command::Infer => stage_infer(&cfg),
        Command::Evaluate => {
            let s = stage_evaluate(&cfg)?;
            println!("{} configs; leakage audit: {} checks, {} violations", s.records.len(), s.audit.checks, s.audit.violations);
            Ok(())
        }
        Command::Select => stage_select(&cfg),
        Command::Report => stage_report(&cfg),
        Command::Run => {
            let s = run_experiment(&cfg, cli.strict)?;
            println!("{} configs; leakage audit: {} checks, {} violations", s.records.len(), s.audit.checks, s.audit.violations);
            println!("results in {}", cfg.out_dir().display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            ExitCode::FAILURE
        }
    }
}
