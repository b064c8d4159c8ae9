//! Command-line driver for Romansh idiom identification experiments.

mod config;
mod error;
mod evaluate;
mod inspect;
mod predict;
mod prepare;
mod train;
mod tune;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ExperimentConfig;
use error::{CliResult, Exit, OrExit};

#[derive(Parser)]
#[command(name = "idiomid", version, about = "Romansh idiom identification")]
struct Cli {
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for training, splits and search; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Only log errors.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Clean, deduplicate, route, mask and split the configured corpora.
    Prepare {
        /// Output directory (default: output_dir from the config).
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Fit the feature space and classifier.
    Train {
        /// Training corpus (default: train.jsonl in the output directory).
        #[arg(long)]
        train: Option<PathBuf>,
        /// Output directory (default: output_dir from the config).
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Score a model on a labeled corpus.
    Evaluate {
        /// Model file written by `train`.
        #[arg(long)]
        model: PathBuf,
        /// Labeled corpus (JSONL or TSV).
        #[arg(long)]
        corpus: PathBuf,
        /// Feature space file, if not the one named in the model file.
        #[arg(long)]
        space: Option<PathBuf>,
        /// Name used for the output files (default: corpus file stem).
        #[arg(long)]
        name: Option<String>,
        /// Directory for the metrics and confusion files.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Macro-average over every label, not just those in the corpus.
        #[arg(long)]
        all_labels: bool,
    },
    /// Label lines of text, one JSON record per line.
    Predict {
        /// Model file written by `train`.
        #[arg(long)]
        model: PathBuf,
        /// Feature space file, if not the one named in the model file.
        #[arg(long)]
        space: Option<PathBuf>,
        /// Input file (default: stdin).
        #[arg(long)]
        input: Option<PathBuf>,
        /// Output file (default: stdout).
        #[arg(long)]
        output: Option<PathBuf>,
        /// Include per-class scores.
        #[arg(long)]
        scores: bool,
    },
    /// Randomized hyperparameter search with cross-validation.
    Tune {
        /// Training corpus (default: train.jsonl in the output directory).
        #[arg(long)]
        train: Option<PathBuf>,
        /// Directory for the trial log and results.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Override the number of trials.
        #[arg(long)]
        n_iter: Option<usize>,
        /// Continue from an existing trial log.
        #[arg(long)]
        resume: bool,
    },
    /// List the top-weighted features of each class.
    Inspect {
        /// Model file written by `train`.
        #[arg(long)]
        model: PathBuf,
        /// Feature space file, if not the one named in the model file.
        #[arg(long)]
        space: Option<PathBuf>,
        /// Features listed per class.
        #[arg(short, long, default_value_t = 3)]
        k: usize,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .or_exit(Exit::Usage)?;
    }
    let cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    }
    .with_seed(cli.seed);
    match cli.command {
        Command::Prepare { output_dir } => prepare::run(&cfg, &cfg.output_dir(output_dir.as_deref())),
        Command::Train { train, output_dir } => {
            let out = cfg.output_dir(output_dir.as_deref());
            let train = train.unwrap_or_else(|| cfg.output_dir(None).join("train.jsonl"));
            train::run(&cfg, &train, &out)
        }
        Command::Evaluate {
            model,
            corpus,
            space,
            name,
            output_dir,
            all_labels,
        } => evaluate::run(evaluate::EvaluateArgs {
            model: &model,
            corpus: &corpus,
            space: space.as_deref(),
            name: name.as_deref(),
            output_dir: output_dir.as_deref(),
            all_labels,
            labels: cli.config.is_some().then(|| cfg.labels.clone()),
        }),
        Command::Predict {
            model,
            space,
            input,
            output,
            scores,
        } => predict::run(&model, space.as_deref(), input.as_deref(), output.as_deref(), scores),
        Command::Tune {
            train,
            output_dir,
            n_iter,
            resume,
        } => {
            let mut cfg = cfg.clone();
            if let Some(n) = n_iter {
                cfg.search.n_iter = n;
            }
            let out = cfg.output_dir(output_dir.as_deref());
            let train = train.unwrap_or_else(|| cfg.output_dir(None).join("train.jsonl"));
            tune::run(&cfg, &train, &out, resume)
        }
        Command::Inspect { model, space, k, json } => inspect::run(&model, space.as_deref(), k, json),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { Exit::Usage as u8 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = if cli.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit as u8)
        }
    }
}
