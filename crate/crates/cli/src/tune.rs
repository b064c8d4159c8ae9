//! `idiomid tune`: randomized hyperparameter search.

use std::fs;
use std::path::Path;

use anyhow::Context;
use idiomid::corpus::stratified_subsample;
use idiomid::tuning::{best_config, RandomSearch, SearchOptions, SearchSpace, TuningError};
use serde::Serialize;

use crate::config::{ExperimentConfig, SearchFamily};
use crate::error::{fail, CliResult, Exit, OrExit};
use crate::train::load_training_corpus;

pub const TRIAL_LOG: &str = "trials.jsonl";
pub const RESULTS_FILE: &str = "search_results.json";
pub const BEST_CONFIG_FILE: &str = "best_config.json";

#[derive(Serialize)]
struct SearchRecord<'a> {
    config: serde_json::Value,
    space: &'a SearchSpace,
    n_samples: usize,
    results: &'a [idiomid::tuning::TrialResult],
}

pub fn run(cfg: &ExperimentConfig, train_path: &Path, output_dir: &Path, resume: bool) -> CliResult<()> {
    let mut corpus = load_training_corpus(cfg, train_path)?;
    if let Some(fraction) = cfg.search.subsample {
        corpus = stratified_subsample(&corpus, fraction, cfg.seed).or_exit(Exit::Data)?;
        log::info!("searching on a stratified subsample of {} samples", corpus.len());
    }
    let space = match &cfg.search.space {
        Some(p) => SearchSpace::load(&cfg.resolve(p)).or_exit(Exit::Usage)?,
        None => match cfg.search.family {
            SearchFamily::Svm => SearchSpace::svm(),
            SearchFamily::Logistic => SearchSpace::logistic(),
        },
    };
    fs::create_dir_all(output_dir)
        .with_context(|| format!("creating {}", output_dir.display()))
        .or_exit(Exit::Data)?;
    let search = RandomSearch {
        space: &space,
        base: &cfg.pipeline,
        options: SearchOptions {
            n_iter: cfg.search.n_iter,
            folds: cfg.search.folds,
            seed: cfg.seed,
            objective: cfg.search.objective,
        },
        log_path: Some(output_dir.join(TRIAL_LOG)),
        resume,
    };
    let results = search.run::<f64>(&corpus).map_err(|e| {
        let exit = match e {
            TuningError::ClassTooSmall { .. } | TuningError::CorruptLog { .. } | TuningError::Io { .. } => Exit::Data,
            _ => Exit::Usage,
        };
        crate::error::CliError { exit, error: e.into() }
    })?;

    let record = SearchRecord {
        config: cfg.echo(),
        space: &space,
        n_samples: corpus.len(),
        results: &results,
    };
    let json = serde_json::to_string_pretty(&record).expect("results serialize");
    fs::write(output_dir.join(RESULTS_FILE), json + "\n").or_exit(Exit::Data)?;

    for r in results.iter().take(5) {
        let params = serde_json::to_string(&r.params).expect("params serialize");
        println!("#{:<3} trial {:<3} mean {:.4}  {params}", r.rank.unwrap_or(0), r.trial, r.mean_score);
    }
    let Some(best) = best_config(&results, &cfg.pipeline) else {
        return fail(Exit::Training, "every trial failed");
    };
    let mut best_cfg = cfg.clone();
    best_cfg.pipeline = best.or_exit(Exit::Usage)?;
    let json = serde_json::to_string_pretty(&best_cfg).expect("config serializes");
    fs::write(output_dir.join(BEST_CONFIG_FILE), json + "\n").or_exit(Exit::Data)?;
    Ok(())
}
