//! `idiomid evaluate` and the model-loading helpers shared with `predict`
//! and `inspect`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use idiomid::corpus::{load_corpus, CorpusFormat, LabelSet};
use idiomid::eval::{metrics_with, MacroAverage};
use idiomid::features::{FeatureError, FeatureSpace};
use idiomid::models::{load_model, Classifier, ModelError, ModelFile};
use serde::Serialize;

use crate::error::{fail, CliResult, Exit, OrExit};

pub struct LoadedModel {
    pub file: ModelFile<f64>,
    pub space: FeatureSpace<f64>,
}

impl LoadedModel {
    /// The label set the model was configured with, if it recorded one.
    pub fn label_set(&self) -> Option<LabelSet> {
        self.file
            .metadata
            .pointer("/config/labels")
            .and_then(|v| serde_json::from_value(v.clone()).ok())
    }
}

/// Loads a model file and the feature space it is bound to.
pub fn load(model_path: &Path, space_override: Option<&Path>) -> CliResult<LoadedModel> {
    let file = load_model::<f64>(model_path)
        .map_err(|e| {
            let exit = if matches!(e, ModelError::Io { .. }) { Exit::Data } else { Exit::Evaluation };
            (exit, anyhow::Error::from(e))
        })
        .map_err(|(exit, error)| crate::error::CliError { exit, error })?;
    let space_path: PathBuf = match (space_override, &file.feature_space.path) {
        (Some(p), _) => p.to_owned(),
        (None, Some(rel)) => model_path.parent().unwrap_or(Path::new(".")).join(rel),
        (None, None) => return fail(Exit::Usage, "model file names no feature space; pass --space"),
    };
    let space = FeatureSpace::<f64>::load(&space_path).map_err(|e| {
        let exit = if matches!(e, FeatureError::Io { .. }) { Exit::Data } else { Exit::Evaluation };
        crate::error::CliError {
            exit,
            error: anyhow::Error::from(e).context(format!("loading feature space {}", space_path.display())),
        }
    })?;
    file.check_space(&space).or_exit(Exit::Evaluation)?;
    Ok(LoadedModel { file, space })
}

#[derive(Serialize)]
struct EvaluationRecord<'a> {
    corpus: String,
    model: String,
    report: &'a idiomid::eval::MetricsReport,
}

pub struct EvaluateArgs<'a> {
    pub model: &'a Path,
    pub corpus: &'a Path,
    pub space: Option<&'a Path>,
    pub name: Option<&'a str>,
    pub output_dir: Option<&'a Path>,
    pub all_labels: bool,
    pub labels: Option<LabelSet>,
}

pub fn run(args: EvaluateArgs) -> CliResult<()> {
    let loaded = load(args.model, args.space)?;
    let labels = args
        .labels
        .or_else(|| loaded.label_set())
        .unwrap_or_default();
    let corpus = load_corpus(args.corpus, CorpusFormat::from_path(args.corpus), &labels)
        .with_context(|| format!("loading {}", args.corpus.display()))
        .or_exit(Exit::Data)?;
    let texts: Vec<&str> = corpus.texts().collect();
    let x = loaded.space.transform_all(&texts, loaded.file.weighting);
    let predicted = loaded.file.model.predict_batch(&x).or_exit(Exit::Evaluation)?;
    let macro_average = if args.all_labels { MacroAverage::AllLabels } else { MacroAverage::PresentInTruth };
    let mut label_list = labels.labels().to_vec();
    for c in loaded.file.model.classes() {
        if !label_list.contains(c) {
            label_list.push(c.clone());
        }
    }
    let report = metrics_with(&corpus.labels(), &predicted, &label_list, macro_average).or_exit(Exit::Evaluation)?;
    let cm = idiomid::eval::confusion(&corpus.labels(), &predicted, &label_list).or_exit(Exit::Evaluation)?;

    let name = args.name.map(str::to_owned).unwrap_or_else(|| {
        args.corpus
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "eval".into())
    });
    let out = args
        .output_dir
        .map(Path::to_owned)
        .unwrap_or_else(|| args.model.parent().unwrap_or(Path::new(".")).to_owned());
    fs::create_dir_all(&out).or_exit(Exit::Data)?;
    let record = EvaluationRecord {
        corpus: args.corpus.display().to_string(),
        model: args.model.display().to_string(),
        report: &report,
    };
    let json = serde_json::to_string_pretty(&record).expect("report serializes");
    fs::write(out.join(format!("{name}.metrics.json")), json + "\n").or_exit(Exit::Data)?;
    fs::write(out.join(format!("{name}.confusion.csv")), cm.to_csv(false)).or_exit(Exit::Data)?;
    fs::write(out.join(format!("{name}.confusion_normalized.csv")), cm.to_csv(true)).or_exit(Exit::Data)?;

    println!("{name}: {} samples", report.n_samples);
    print!("{}", report.to_table());
    if report.zero_division_warnings > 0 {
        log::warn!("{} undefined precision/recall/F1 values were set to 0", report.zero_division_warnings);
    }
    Ok(())
}
