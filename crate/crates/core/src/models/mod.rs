//! Linear and naive Bayes classifiers over sparse feature vectors.

mod baseline;
mod inspect;
mod io;
pub mod loss;
mod nb;
mod sgd;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::VarietyLabel;
use crate::features::SparseVector;
use crate::Scalar;

pub use baseline::{majority_baseline, MajorityModel};
pub use inspect::{top_features, ClassFeatures, TopFeature};
pub use io::{load_model, save_model, FeatureSpaceBinding, Model, ModelFile};
pub use loss::Loss;
pub use nb::{train_nb, NBModel, NbVariant};
pub use sgd::{train_sgd, LinearModel, MulticlassScheme, TrainMeta};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("training data contains a single class")]
    SingleClassInput,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("feature vector does not belong to the model's feature space: {0}")]
    FeatureSpaceMismatch(String),
    #[error("negative feature value {value} at index {index}")]
    NegativeFeatureValue { index: usize, value: f64 },
    #[error("empty training set")]
    EmptyInput,
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("model format version {found} is not supported by this build (expected {expected}); retrain or convert the model")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("corrupt model file: {0}")]
    CorruptFile(String),
    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Penalty {
    L2,
    L1,
    #[serde(alias = "elastic_net")]
    ElasticNet,
}

/// Step size schedule for SGD.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearningRate {
    /// `eta0 / (1 + eta0 * alpha * t)` with `t` the number of updates so far.
    #[default]
    Decaying,
    /// `eta0` throughout.
    Constant,
}

/// SGD hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub loss: Loss,
    pub penalty: Penalty,
    /// Regularization strength; overridden by `C` when that is set.
    pub alpha: f64,
    /// Inverse regularization strength, mapped to `alpha = 1 / (C * n_samples)`.
    #[serde(rename = "C", alias = "c", skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    pub l1_ratio: f64,
    pub max_epochs: usize,
    pub early_stopping: bool,
    pub validation_fraction: f64,
    pub patience: usize,
    pub tol: f64,
    pub eta0: f64,
    pub learning_rate: LearningRate,
    pub batch_size: usize,
    pub shuffle: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            loss: Loss::Hinge,
            penalty: Penalty::L2,
            alpha: 1e-4,
            c: None,
            l1_ratio: 0.15,
            max_epochs: 5000,
            early_stopping: true,
            validation_fraction: 0.1,
            patience: 5,
            tol: 1e-3,
            eta0: 0.1,
            learning_rate: LearningRate::Decaying,
            batch_size: 1,
            shuffle: true,
            seed: crate::rng::DEFAULT_SEED,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(ModelError::InvalidConfig(msg.to_owned()));
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be positive");
        }
        if let Some(c) = self.c {
            if !(c > 0.0 && c.is_finite()) {
                return bad("C must be positive");
            }
        }
        if !(0.0..=1.0).contains(&self.l1_ratio) {
            return bad("l1_ratio must lie in [0, 1]");
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return bad("validation_fraction must lie in (0, 1)");
        }
        if self.max_epochs == 0 || self.patience == 0 || self.batch_size == 0 {
            return bad("max_epochs, patience and batch_size must be positive");
        }
        if !(self.tol > 0.0) || !(self.eta0 > 0.0) {
            return bad("tol and eta0 must be positive");
        }
        Ok(())
    }

    /// Regularization strength for a training set of `n_samples`.
    pub fn effective_alpha(&self, n_samples: usize) -> f64 {
        match self.c {
            Some(c) => 1.0 / (c * n_samples as f64),
            None => self.alpha,
        }
    }

    /// `(l2, l1)` strengths so that the penalty is `l2/2 |w|^2 + l1 |w|_1`.
    pub fn penalty_strengths(&self, alpha: f64) -> (f64, f64) {
        match self.penalty {
            Penalty::L2 => (alpha, 0.0),
            Penalty::L1 => (0.0, alpha),
            Penalty::ElasticNet => (alpha * (1.0 - self.l1_ratio), alpha * self.l1_ratio),
        }
    }
}

/// Anything that scores a feature vector against a fixed class list.
pub trait Classifier<F: Scalar>: Sync {
    fn classes(&self) -> &[VarietyLabel];

    /// One score per class; higher means more likely.
    fn decision_scores(&self, x: &SparseVector<F>) -> Result<Vec<F>>;

    /// Highest-scoring class; ties go to the lowest class index.
    fn predict(&self, x: &SparseVector<F>) -> Result<&VarietyLabel> {
        let scores = self.decision_scores(x)?;
        Ok(&self.classes()[argmax(&scores)])
    }

    fn predict_batch(&self, xs: &[SparseVector<F>]) -> Result<Vec<VarietyLabel>> {
        use rayon::prelude::*;
        xs.par_iter().map(|x| self.predict(x).cloned()).collect()
    }
}

/// Index of the first maximum.
pub fn argmax<F: Scalar>(scores: &[F]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

fn check_dim<F: Scalar>(x: &SparseVector<F>, dim: usize) -> Result<()> {
    if x.min_dim() > dim {
        return Err(ModelError::FeatureSpaceMismatch(format!(
            "index {} outside a {dim}-dimensional space",
            x.min_dim() - 1
        )));
    }
    Ok(())
}

/// Sorted distinct labels and each sample's class index.
fn encode_labels(y: &[VarietyLabel]) -> (Vec<VarietyLabel>, Vec<usize>) {
    let mut classes: Vec<VarietyLabel> = y.to_vec();
    classes.sort();
    classes.dedup();
    let codes = y
        .iter()
        .map(|l| classes.binary_search(l).expect("label drawn from classes"))
        .collect();
    (classes, codes)
}
