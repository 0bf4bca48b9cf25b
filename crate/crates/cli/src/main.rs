use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use prism_cli::config::{self, RunConfig};
use prism_cli::error::{CliError, CliResult};
use prism_cli::stages;

/// Single-cell leukemia screening: segmentation, perinuclear zone features
/// and calibrated stacking.
#[derive(Parser)]
#[command(name = "prism", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML configuration; unspecified keys keep their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    dataset: Option<PathBuf>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Comma list from {rf,et,svm,logreg,knn,gbdt}; for `ablate`, the pool.
    #[arg(long, global = true)]
    models: Option<String>,
    #[arg(long, global = true)]
    folds: Option<usize>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand, Clone)]
enum Command {
    /// Scan the dataset and write manifest.csv.
    Ingest,
    /// Segment every image; write masks, overlays and segmentation.jsonl.
    Segment,
    /// Segment inline and write features.csv with its schema.
    Extract,
    /// Fit the stack on all rows and write model.json.
    Train,
    /// Score features.csv with a trained model.
    Predict {
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Stratified cross-validation of one configuration.
    Evaluate,
    /// Cross-validate every non-empty subset of the learner pool.
    Ablate,
    /// Regenerate plots and summary.md from saved reports.
    Report,
    /// Write a synthetic two-class corpus into the dataset directory.
    Synth {
        #[arg(long, default_value_t = 400)]
        count: usize,
    },
    /// ingest, segment + extract, evaluate, ablate, report.
    Run,
    /// Print the effective configuration as TOML.
    Config,
}

fn resolve(cli: &Cli) -> CliResult<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => config::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(d) = &cli.dataset {
        cfg.dataset = d.clone();
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    if let Some(m) = &cli.models {
        let kinds = config::parse_models(m)?;
        match cli.command {
            Command::Ablate => cfg.ablation_models = kinds,
            _ => cfg.models = kinds,
        }
    }
    if let Some(f) = cli.folds {
        cfg.ml.folds = f;
    }
    if let Some(j) = cli.jobs {
        cfg.jobs = j;
    }
    cfg.validated()
}

fn execute(cli: Cli) -> CliResult<()> {
    let cfg = resolve(&cli)?;
    if cfg.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build_global()
            .map_err(|e| CliError::Other(e.into()))?;
    }
    match cli.command {
        Command::Ingest => {
            stages::ingest(&cfg)?;
        }
        Command::Segment => {
            stages::segment(&cfg)?;
        }
        Command::Extract => {
            let t = stages::extract(&cfg)?;
            log::info!("features: {} rows x {} columns", t.len(), t.width());
        }
        Command::Train => {
            stages::train(&cfg)?;
        }
        Command::Predict { model } => {
            stages::predict(&cfg, model.as_deref())?;
        }
        Command::Evaluate => {
            stages::evaluate(&cfg)?;
        }
        Command::Ablate => {
            stages::ablate(&cfg)?;
        }
        Command::Report => print!("{}", stages::report(&cfg)?),
        Command::Synth { count } => {
            stages::synth(&cfg, count)?;
        }
        Command::Run => {
            stages::ingest(&cfg)?;
            stages::segment_and_extract(&cfg)?;
            stages::evaluate(&cfg)?;
            stages::ablate(&cfg)?;
            print!("{}", stages::report(&cfg)?);
        }
        Command::Config => print!("{}", cfg.to_toml()),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
