use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use crashlab_pipeline::{with_workers, Pipeline, PipelineError, RunConfig, Stage};

#[derive(Parser)]
#[command(
    name = "crashlab",
    version,
    about = "Composite battery-enclosure crash surrogate pipeline"
)]
struct Cli {
    /// Flat `key = value` config file; omitted keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `run.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Latin hypercube design of experiments.
    Sample,
    /// Forming gate and crash simulation for every DOE row.
    Simulate,
    /// Dataset of formed samples.
    Extract,
    /// Grid search with k-fold cross-validation.
    Tune,
    /// Fit, evaluate and save one model per target.
    Train,
    /// Symbolic regression per configured target.
    Symreg,
    /// Plots and plot data.
    Report,
    /// All stages in order, skipping those already current.
    Run,
    /// Print the resolved config and exit.
    Config,
}

fn load_config(cli: &Cli) -> Result<RunConfig, PipelineError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: &Cli, cfg: RunConfig) -> Result<(), PipelineError> {
    let stages: Vec<Stage> = match cli.command {
        Command::Sample => vec![Stage::Sample],
        Command::Simulate => vec![Stage::Simulate],
        Command::Extract => vec![Stage::Extract],
        Command::Tune => vec![Stage::Tune],
        Command::Train => vec![Stage::Train],
        Command::Symreg => vec![Stage::Symreg],
        Command::Report => vec![Stage::Report],
        Command::Run => Vec::new(),
        Command::Config => {
            print!("{}", cfg.canonical());
            println!("# hash {}", cfg.hash());
            return Ok(());
        }
    };
    let workers = cfg.workers;
    let pipeline = Pipeline::new(cfg)?;
    let stages = if stages.is_empty() { pipeline.plan() } else { stages };
    with_workers(workers, || -> Result<(), PipelineError> {
        for stage in stages {
            let outcome = pipeline.run_stage(stage)?;
            let status = if outcome.skipped { "up to date" } else { "done" };
            eprintln!("{:<9} {status} ({} files)", stage.name(), outcome.outputs.len());
        }
        Ok(())
    })??;
    let manifest = pipeline.write_manifest()?;
    eprintln!("manifest  {}", manifest.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = load_config(&cli).and_then(|cfg| execute(&cli, cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = e.exit_code();
            let err = match code {
                2 => anyhow::Error::new(e),
                _ => anyhow::Error::new(e).context("pipeline failed"),
            };
            eprintln!("error: {err:#}");
            ExitCode::from(code)
        }
    }
}
