//! Stratified k-fold cross-validation and seeded randomized search.

use std::collections::{BTreeMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::corpus::{LabeledCorpus, VarietyLabel};
use crate::eval::{metrics, MetricsReport};
use crate::features::{FeatureSpace, Weighting};
use crate::models::{Loss, NbVariant, Penalty};
use crate::pipeline::{ModelSpec, PipelineConfig};
use crate::rng::{permutation, seeded, SeededRng};
use crate::Scalar;

pub const SEARCH_SPACE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum TuningError {
    #[error("class {label} has {have} samples, fewer than the {need} folds")]
    ClassTooSmall { label: String, have: usize, need: usize },
    #[error("need at least 2 folds, got {0}")]
    InvalidFolds(usize),
    #[error("invalid search space: {0}")]
    InvalidSpace(String),
    #[error("unknown hyperparameter {0:?}")]
    UnknownParameter(String),
    #[error("invalid value {value} for hyperparameter {name:?}")]
    InvalidValue { name: String, value: Value },
    #[error("trial log {}: line {line}: {reason}", path.display())]
    CorruptLog { path: PathBuf, line: usize, reason: String },
    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = TuningError> = std::result::Result<T, E>;

/// Per-fold `(train, test)` index lists.
pub type Folds = Vec<(Vec<usize>, Vec<usize>)>;

/// Stratified k-fold split.
///
/// Members of each class are shuffled with the seeded rng and dealt
/// round-robin over the folds; the dealer position carries over from one
/// class to the next so fold sizes stay balanced too.
pub fn stratified_kfold(labels: &[VarietyLabel], k: usize, seed: u64) -> Result<Folds> {
    if k < 2 {
        return Err(TuningError::InvalidFolds(k));
    }
    let mut by_class: BTreeMap<&VarietyLabel, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    let mut fold_of = vec![0usize; labels.len()];
    let mut rng = seeded(seed);
    let mut dealer = 0;
    for (label, members) in &by_class {
        if members.len() < k {
            return Err(TuningError::ClassTooSmall {
                label: label.to_string(),
                have: members.len(),
                need: k,
            });
        }
        for j in permutation(members.len(), &mut rng) {
            fold_of[members[j]] = dealer % k;
            dealer += 1;
        }
    }
    Ok((0..k)
        .map(|f| (0..labels.len()).partition(|&i| fold_of[i] != f))
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Distribution {
    LogUniform { lo: f64, hi: f64 },
    Uniform { lo: f64, hi: f64 },
    Choice { values: Vec<Value> },
}

impl Distribution {
    pub fn sample(&self, rng: &mut SeededRng) -> Value {
        match self {
            Distribution::LogUniform { lo, hi } => Value::from(rng.random_range(lo.ln()..hi.ln()).exp()),
            Distribution::Uniform { lo, hi } => Value::from(rng.random_range(*lo..*hi)),
            Distribution::Choice { values } => values[rng.random_range(0..values.len())].clone(),
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        let bad = |msg: &str| Err(TuningError::InvalidSpace(format!("{name}: {msg}")));
        match self {
            Distribution::LogUniform { lo, hi } if !(*lo > 0.0 && lo < hi && hi.is_finite()) => {
                bad("log_uniform needs 0 < lo < hi")
            }
            Distribution::Uniform { lo, hi } if !(lo < hi && lo.is_finite() && hi.is_finite()) => {
                bad("uniform needs lo < hi")
            }
            Distribution::Choice { values } if values.is_empty() => bad("choice needs at least one value"),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub dist: Distribution,
    /// The parameter is only set when every listed parameter took one of
    /// the listed values.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub active_when: BTreeMap<String, Vec<Value>>,
}

/// A combination that may not be drawn; when it matches, `resample` is
/// drawn again.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForbidRule {
    pub when: BTreeMap<String, Vec<Value>>,
    pub resample: String,
}

/// One sampled hyperparameter assignment.
pub type Assignment = BTreeMap<String, Value>;

fn matches(conditions: &BTreeMap<String, Vec<Value>>, a: &Assignment) -> bool {
    conditions
        .iter()
        .all(|(name, allowed)| a.get(name).is_some_and(|v| allowed.contains(v)))
}

const MAX_RESAMPLES: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub version: u32,
    pub params: Vec<ParamSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rules: Vec<ForbidRule>,
}

impl SearchSpace {
    fn feature_params() -> Vec<ParamSpec> {
        let choice = |name: &str, values: Value| ParamSpec {
            name: name.into(),
            dist: Distribution::Choice {
                values: values.as_array().cloned().unwrap_or_default(),
            },
            active_when: BTreeMap::new(),
        };
        vec![
            choice("char_ngram_range", serde_json::json!([[1, 3], [1, 4]])),
            choice("word_ngram_range", serde_json::json!([[1, 1], [1, 2]])),
            choice("min_df", serde_json::json!([1, 2])),
        ]
    }

    /// Space for hinge-family linear models.
    pub fn svm() -> Self {
        let mut params = vec![
            ParamSpec {
                name: "C".into(),
                dist: Distribution::LogUniform { lo: 1e-2, hi: 4.0 },
                active_when: BTreeMap::new(),
            },
            ParamSpec {
                name: "penalty".into(),
                dist: Distribution::Choice { values: vec!["l2".into(), "l1".into()] },
                active_when: BTreeMap::new(),
            },
            ParamSpec {
                name: "loss".into(),
                dist: Distribution::Choice { values: vec!["hinge".into(), "squared_hinge".into()] },
                active_when: BTreeMap::new(),
            },
        ];
        params.extend(Self::feature_params());
        Self { version: SEARCH_SPACE_VERSION, params, rules: Vec::new() }
    }

    /// Space for logistic regression.
    pub fn logistic() -> Self {
        let mut params = vec![
            ParamSpec {
                name: "C".into(),
                dist: Distribution::LogUniform { lo: 1e-2, hi: 2.0 },
                active_when: BTreeMap::new(),
            },
            ParamSpec {
                name: "penalty".into(),
                dist: Distribution::Choice {
                    values: vec!["l2".into(), "l1".into(), "elasticnet".into()],
                },
                active_when: BTreeMap::new(),
            },
            ParamSpec {
                name: "l1_ratio".into(),
                dist: Distribution::Uniform { lo: 0.05, hi: 0.9 },
                active_when: BTreeMap::from([("penalty".to_owned(), vec!["elasticnet".into()])]),
            },
        ];
        params.extend(Self::feature_params());
        Self { version: SEARCH_SPACE_VERSION, params, rules: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != SEARCH_SPACE_VERSION {
            return Err(TuningError::InvalidSpace(format!(
                "version {} is not supported (expected {SEARCH_SPACE_VERSION})",
                self.version
            )));
        }
        let mut seen = HashSet::new();
        for p in &self.params {
            p.dist.validate(&p.name)?;
            for dep in p.active_when.keys() {
                if !seen.contains(dep.as_str()) {
                    return Err(TuningError::InvalidSpace(format!(
                        "{} depends on {dep}, which must be declared before it",
                        p.name
                    )));
                }
            }
            if !seen.insert(p.name.as_str()) {
                return Err(TuningError::InvalidSpace(format!("{} declared twice", p.name)));
            }
        }
        for r in &self.rules {
            if !seen.contains(r.resample.as_str()) || r.when.keys().any(|k| !seen.contains(k.as_str())) {
                return Err(TuningError::InvalidSpace(format!(
                    "rule on {:?} refers to an undeclared parameter",
                    r.when.keys().collect::<Vec<_>>()
                )));
            }
        }
        Ok(())
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let space: Self = serde_json::from_str(json).map_err(|e| TuningError::InvalidSpace(e.to_string()))?;
        space.validate()?;
        Ok(space)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let json = fs::read_to_string(path).map_err(|source| TuningError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&json)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("search space serializes")
    }
}

/// Draws one assignment.
///
/// Every parameter is drawn in declaration order, inactive ones are then
/// dropped, and forbidden combinations are repaired by redrawing the
/// rule's target parameter.
pub fn sample_params(space: &SearchSpace, rng: &mut SeededRng) -> Assignment {
    let mut a: Assignment = space
        .params
        .iter()
        .map(|p| (p.name.clone(), p.dist.sample(rng)))
        .collect();
    for p in &space.params {
        if !matches(&p.active_when, &a) {
            a.remove(&p.name);
        }
    }
    for _ in 0..MAX_RESAMPLES {
        let Some(rule) = space.rules.iter().find(|r| matches(&r.when, &a)) else {
            return a;
        };
        let spec = space
            .params
            .iter()
            .find(|p| p.name == rule.resample)
            .expect("validated rule target");
        a.insert(spec.name.clone(), spec.dist.sample(rng));
    }
    log::warn!("could not draw an allowed combination after {MAX_RESAMPLES} attempts");
    a
}

fn range_of(name: &str, v: &Value) -> Result<(usize, usize)> {
    let invalid = || TuningError::InvalidValue { name: name.into(), value: v.clone() };
    let pair: [usize; 2] = serde_json::from_value(v.clone()).map_err(|_| invalid())?;
    if pair[0] == 0 || pair[0] > pair[1] {
        return Err(invalid());
    }
    Ok((pair[0], pair[1]))
}

/// `base` with the sampled hyperparameters filled in.
pub fn apply_assignment(base: &PipelineConfig, a: &Assignment) -> Result<PipelineConfig> {
    let mut cfg = base.clone();
    for (name, v) in a {
        let invalid = || TuningError::InvalidValue { name: name.clone(), value: v.clone() };
        let float = || v.as_f64().ok_or_else(invalid);
        match (name.as_str(), &mut cfg.model) {
            ("char_ngram_range", _) => {
                (cfg.features.char_ngram_min, cfg.features.char_ngram_max) = range_of(name, v)?;
            }
            ("word_ngram_range", _) => {
                (cfg.features.word_ngram_min, cfg.features.word_ngram_max) = range_of(name, v)?;
            }
            ("min_df", _) => {
                cfg.features.min_df = v.as_u64().filter(|&n| n > 0).ok_or_else(invalid)? as usize;
            }
            ("weighting", _) => {
                cfg.weighting = serde_json::from_value::<Weighting>(v.clone()).map_err(|_| invalid())?;
            }
            ("C", ModelSpec::Sgd(t)) => t.c = Some(float()?),
            ("alpha", ModelSpec::Sgd(t)) => {
                t.alpha = float()?;
                t.c = None;
            }
            ("l1_ratio", ModelSpec::Sgd(t)) => t.l1_ratio = float()?,
            ("eta0", ModelSpec::Sgd(t)) => t.eta0 = float()?,
            ("penalty", ModelSpec::Sgd(t)) => {
                t.penalty = serde_json::from_value::<Penalty>(v.clone()).map_err(|_| invalid())?;
            }
            ("loss", ModelSpec::Sgd(t)) => {
                t.loss = serde_json::from_value::<Loss>(v.clone()).map_err(|_| invalid())?;
            }
            ("alpha", ModelSpec::NaiveBayes { alpha, .. }) => *alpha = float()?,
            ("variant", ModelSpec::NaiveBayes { variant, .. }) => {
                *variant = serde_json::from_value::<NbVariant>(v.clone()).map_err(|_| invalid())?;
            }
            _ => return Err(TuningError::UnknownParameter(name.clone())),
        }
    }
    Ok(cfg)
}

/// Score that the search maximizes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    #[default]
    MacroF1,
    Accuracy,
}

impl Objective {
    pub fn of(self, report: &MetricsReport) -> f64 {
        match self {
            Objective::MacroF1 => report.macro_f1,
            Objective::Accuracy => report.accuracy,
        }
    }
}

mod score_serde {
    //! Failed trials score negative infinity, stored as `null` in JSON.
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    /// Position of the trial in the sampled sequence.
    pub trial: usize,
    pub params: Assignment,
    pub fold_scores: Vec<f64>,
    #[serde(with = "score_serde")]
    pub mean_score: f64,
    /// 1-based rank by mean score; absent until the search has finished.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl TrialResult {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

/// What an observer sees after the vocabulary of a fold has been fitted.
pub struct FoldContext<'a, F: Scalar> {
    pub trial: usize,
    pub fold: usize,
    pub train: &'a [usize],
    pub test: &'a [usize],
    pub space: &'a FeatureSpace<F>,
}

/// Cross-validates one configuration; fails on the first fold error.
pub fn cross_validate<F: Scalar>(
    corpus: &LabeledCorpus,
    config: &PipelineConfig,
    folds: &Folds,
    objective: Objective,
) -> std::result::Result<Vec<f64>, String> {
    cross_validate_observed::<F, _>(corpus, config, folds, objective, 0, &|_: &FoldContext<F>| {})
}

fn cross_validate_observed<F: Scalar, O: Fn(&FoldContext<F>) + Sync>(
    corpus: &LabeledCorpus,
    config: &PipelineConfig,
    folds: &Folds,
    objective: Objective,
    trial: usize,
    observer: &O,
) -> std::result::Result<Vec<f64>, String> {
    let texts: Vec<&str> = corpus.texts().collect();
    let labels = corpus.labels();
    let label_set: Vec<VarietyLabel> = corpus.label_set().labels().to_vec();
    folds
        .par_iter()
        .enumerate()
        .map(|(fold, (train, test))| {
            let pick = |idx: &[usize]| -> (Vec<&str>, Vec<VarietyLabel>) {
                idx.iter().map(|&i| (texts[i], labels[i].clone())).unzip()
            };
            let (train_texts, train_labels) = pick(train);
            let (test_texts, test_labels) = pick(test);
            let space = FeatureSpace::<F>::fit(&train_texts, &config.features)
                .map_err(|e| format!("fold {fold}: {e}"))?;
            observer(&FoldContext { trial, fold, train, test, space: &space });
            let fitted = config
                .fit_in_space(space, &train_texts, &train_labels)
                .map_err(|e| format!("fold {fold}: {e}"))?;
            let predicted = fitted.predict(&test_texts).map_err(|e| format!("fold {fold}: {e}"))?;
            let report = metrics(&test_labels, &predicted, &label_set).map_err(|e| format!("fold {fold}: {e}"))?;
            Ok(objective.of(&report))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub n_iter: usize,
    pub folds: usize,
    pub seed: u64,
    pub objective: Objective,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            n_iter: 40,
            folds: 5,
            seed: crate::rng::DEFAULT_SEED,
            objective: Objective::MacroF1,
        }
    }
}

/// Randomized hyperparameter search with optional JSONL trial log.
pub struct RandomSearch<'a> {
    pub space: &'a SearchSpace,
    pub base: &'a PipelineConfig,
    pub options: SearchOptions,
    /// Trials are appended here as they finish.
    pub log_path: Option<PathBuf>,
    /// Reuse the trials already in the log instead of starting over.
    pub resume: bool,
}

impl RandomSearch<'_> {
    /// All assignments of the search, drawn up front from the seed.
    pub fn assignments(&self) -> Vec<Assignment> {
        let mut rng = seeded(self.options.seed);
        (0..self.options.n_iter).map(|_| sample_params(self.space, &mut rng)).collect()
    }

    pub fn run<F: Scalar>(&self, corpus: &LabeledCorpus) -> Result<Vec<TrialResult>> {
        self.run_observed::<F, _>(corpus, |_: &FoldContext<F>| {})
    }

    /// Like [`RandomSearch::run`], calling `observer` inside every fold.
    pub fn run_observed<F: Scalar, O: Fn(&FoldContext<F>) + Sync>(
        &self,
        corpus: &LabeledCorpus,
        observer: O,
    ) -> Result<Vec<TrialResult>> {
        self.space.validate()?;
        if self.options.n_iter == 0 {
            return Err(TuningError::InvalidSpace("n_iter must be at least 1".into()));
        }
        let assignments = self.assignments();
        let folds = stratified_kfold(&corpus.labels(), self.options.folds, self.options.seed)?;
        let mut results = match (&self.log_path, self.resume) {
            (Some(path), true) if path.exists() => read_trial_log(path)?,
            _ => Vec::new(),
        };
        if let Some(path) = &self.log_path {
            for (i, r) in results.iter().enumerate() {
                if r.trial != i || assignments.get(i) != Some(&r.params) {
                    return Err(TuningError::CorruptLog {
                        path: path.clone(),
                        line: i + 1,
                        reason: "trial does not match this search's seed and space".into(),
                    });
                }
            }
            if !results.is_empty() {
                log::info!("resuming after {} logged trials", results.len());
            }
        }
        results.truncate(self.options.n_iter);
        let mut writer = match &self.log_path {
            Some(path) => Some(TrialLogWriter::open(path, !results.is_empty())?),
            None => None,
        };
        for (trial, params) in assignments.iter().enumerate().skip(results.len()) {
            let outcome = apply_assignment(self.base, params)
                .map_err(|e| e.to_string())
                .and_then(|cfg| {
                    cross_validate_observed::<F, O>(corpus, &cfg, &folds, self.options.objective, trial, &observer)
                });
            let result = match outcome {
                Ok(fold_scores) => TrialResult {
                    trial,
                    params: params.clone(),
                    mean_score: fold_scores.iter().sum::<f64>() / fold_scores.len() as f64,
                    fold_scores,
                    rank: None,
                    error: None,
                },
                Err(reason) => {
                    log::warn!("trial {trial} failed: {reason}");
                    TrialResult {
                        trial,
                        params: params.clone(),
                        fold_scores: Vec::new(),
                        mean_score: f64::NEG_INFINITY,
                        rank: None,
                        error: Some(reason),
                    }
                }
            };
            log::info!("trial {trial}: mean score {:.4}", result.mean_score);
            if let Some(w) = writer.as_mut() {
                w.append(&result)?;
            }
            results.push(result);
        }
        Ok(rank_trials(results))
    }
}

/// Sorts by mean score, best first, ties by trial index, and fills in ranks.
pub fn rank_trials(mut results: Vec<TrialResult>) -> Vec<TrialResult> {
    results.sort_by(|a, b| b.mean_score.total_cmp(&a.mean_score).then(a.trial.cmp(&b.trial)));
    for (i, r) in results.iter_mut().enumerate() {
        r.rank = Some(i + 1);
    }
    results
}

/// The configuration of the best successful trial.
pub fn best_config(results: &[TrialResult], base: &PipelineConfig) -> Option<Result<PipelineConfig>> {
    results
        .iter()
        .filter(|r| !r.failed())
        .max_by(|a, b| a.mean_score.total_cmp(&b.mean_score).then(b.trial.cmp(&a.trial)))
        .map(|r| apply_assignment(base, &r.params))
}

struct TrialLogWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl TrialLogWriter {
    fn open(path: &Path, append: bool) -> Result<Self> {
        let io = |source| TuningError::Io { path: path.to_owned(), source };
        let file = if append {
            OpenOptions::new().append(true).open(path).map_err(io)?
        } else {
            File::create(path).map_err(io)?
        };
        Ok(Self { path: path.to_owned(), out: BufWriter::new(file) })
    }

    fn append(&mut self, result: &TrialResult) -> Result<()> {
        let line = serde_json::to_string(result).expect("trial serializes");
        writeln!(self.out, "{line}")
            .and_then(|_| self.out.flush())
            .map_err(|source| TuningError::Io { path: self.path.clone(), source })
    }
}

pub fn read_trial_log(path: &Path) -> Result<Vec<TrialResult>> {
    let content = fs::read_to_string(path).map_err(|source| TuningError::Io {
        path: path.to_owned(),
        source,
    })?;
    content
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| TuningError::CorruptLog {
                path: path.to_owned(),
                line: i + 1,
                reason: e.to_string(),
            })
        })
        .collect()
}
