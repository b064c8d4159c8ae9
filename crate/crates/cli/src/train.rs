//! `idiomid train`: fit the feature space and classifier.

use std::fs;
use std::path::Path;

use anyhow::Context;
use idiomid::corpus::{load_corpus, CorpusFormat, LabeledCorpus};
use idiomid::features::FeatureSpace;
use idiomid::models::{save_model, Classifier, Model};
use idiomid::pipeline::PipelineError;

use crate::config::ExperimentConfig;
use crate::error::{fail, CliResult, Exit, OrExit};

pub const MODEL_FILE: &str = "model.json";
pub const SPACE_FILE: &str = "features.json";

pub fn load_training_corpus(cfg: &ExperimentConfig, path: &Path) -> CliResult<LabeledCorpus> {
    let corpus = load_corpus(path, CorpusFormat::from_path(path), &cfg.labels)
        .with_context(|| format!("loading {}", path.display()))
        .or_exit(Exit::Data)?;
    if corpus.is_empty() {
        return fail(Exit::Data, format!("{} contains no samples", path.display()));
    }
    Ok(corpus)
}

pub fn run(cfg: &ExperimentConfig, train_path: &Path, output_dir: &Path) -> CliResult<()> {
    let corpus = load_training_corpus(cfg, train_path)?;
    let texts: Vec<&str> = corpus.texts().collect();
    let labels = corpus.labels();
    let fitted = cfg.pipeline.fit::<f64>(&texts, &labels).map_err(|e| match e {
        PipelineError::Features(e) => anyhow::Error::from(e).context("fitting the feature space"),
        PipelineError::Model(e) => anyhow::Error::from(e).context("training the model"),
    });
    let fitted = fitted.or_exit(Exit::Training)?;
    let predicted = fitted.predict(&texts).or_exit(Exit::Training)?;
    let train_acc = predicted.iter().zip(&labels).filter(|(p, t)| p == t).count() as f64 / labels.len() as f64;

    let (space, mut file) = fitted.into_model_file(Some(SPACE_FILE.to_owned()));
    file.metadata = serde_json::json!({ "config": cfg.echo() });
    fs::create_dir_all(output_dir)
        .with_context(|| format!("creating {}", output_dir.display()))
        .or_exit(Exit::Data)?;
    space.save(&output_dir.join(SPACE_FILE)).or_exit(Exit::Data)?;
    save_model(&file, &output_dir.join(MODEL_FILE)).or_exit(Exit::Data)?;

    summarize(&space, &file.model, corpus.len(), train_acc);
    Ok(())
}

fn summarize(space: &FeatureSpace<f64>, model: &Model<f64>, n: usize, train_acc: f64) {
    let classes: Vec<&str> = model.classes().iter().map(|c| c.as_str()).collect();
    println!("samples:        {n}");
    println!("features:       {}", space.dim());
    println!("classes:        {}", classes.join(", "));
    match model {
        Model::Linear(m) => {
            let meta = &m.train_meta;
            println!("alpha:          {:e}", meta.effective_alpha);
            println!("epochs:         {:?}", meta.epochs);
            println!("objective:      {:.6}", meta.final_objective);
        }
        Model::NaiveBayes(m) => println!("smoothing:      {}", m.alpha),
        Model::Majority(m) => println!("majority:       {}", m.label()),
    }
    println!("train accuracy: {}", idiomid::eval::percent(train_acc));
}
