//! Stochastic gradient descent for linear models.
//!
//! Hinge-family losses train one binary model per class (one-vs-rest); log
//! loss trains one multinomial softmax model. L2 shrinkage is applied
//! lazily through a scale factor on the weight vector, and L1 uses the
//! cumulative penalty method: each weight is clipped toward zero by the
//! penalty accumulated since it was last touched, so weights reach
//! exactly 0.0.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_dim, encode_labels, Classifier, LearningRate, Loss, ModelError, Result, TrainConfig};
use crate::corpus::VarietyLabel;
use crate::features::{FeatureSpace, SparseVector};
use crate::rng::{permutation, seeded};
use crate::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MulticlassScheme {
    OneVsRest,
    Multinomial,
}

/// What happened during training, kept with the model for audit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    pub config: TrainConfig,
    pub effective_alpha: f64,
    pub n_samples: usize,
    pub n_validation: usize,
    /// Epochs run per sub-problem (one per class for one-vs-rest).
    pub epochs: Vec<usize>,
    /// Regularized training objective after each epoch, per sub-problem.
    pub objective_history: Vec<Vec<f64>>,
    /// Sum of the last objective of every sub-problem.
    pub final_objective: f64,
}

/// Per-class weight rows and intercepts over one feature space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LinearModel<F: Scalar> {
    pub classes: Vec<VarietyLabel>,
    pub scheme: MulticlassScheme,
    pub weights: Vec<Vec<F>>,
    pub intercepts: Vec<F>,
    /// Fingerprint of the feature space the model was trained on.
    pub feature_space_id: String,
    pub train_meta: TrainMeta,
}

impl<F: Scalar> LinearModel<F> {
    pub fn dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    /// Records the feature space this model belongs to.
    pub fn bind(&mut self, space: &FeatureSpace<F>) {
        self.feature_space_id = space.fingerprint();
    }

    /// Softmax class probabilities; only meaningful for multinomial models.
    pub fn predict_proba(&self, x: &SparseVector<F>) -> Result<Vec<F>> {
        Ok(super::loss::softmax(&self.decision_scores(x)?))
    }
}

impl<F: Scalar> Classifier<F> for LinearModel<F> {
    fn classes(&self) -> &[VarietyLabel] {
        &self.classes
    }

    fn decision_scores(&self, x: &SparseVector<F>) -> Result<Vec<F>> {
        check_dim(x, self.dim())?;
        Ok(self
            .weights
            .iter()
            .zip(&self.intercepts)
            .map(|(w, &b)| x.dot(w) + b)
            .collect())
    }
}

/// Weight vector stored as `scale * v`, with cumulative L1 bookkeeping.
struct ScaledWeights<F: Scalar> {
    v: Vec<F>,
    scale: F,
    l1_total: F,
    l1_applied: Vec<F>,
}

impl<F: Scalar> ScaledWeights<F> {
    fn new(dim: usize, with_l1: bool) -> Self {
        Self {
            v: vec![F::zero(); dim],
            scale: F::one(),
            l1_total: F::zero(),
            l1_applied: if with_l1 { vec![F::zero(); dim] } else { Vec::new() },
        }
    }

    fn dot(&self, x: &SparseVector<F>) -> F {
        self.scale * x.dot(&self.v)
    }

    fn add(&mut self, x: &SparseVector<F>, coef: F) {
        let c = coef / self.scale;
        for (i, val) in x.iter() {
            self.v[i] = self.v[i] + c * val;
        }
    }

    fn decay(&mut self, factor: F) {
        if factor <= F::zero() {
            self.v.iter_mut().for_each(|v| *v = F::zero());
            self.scale = F::one();
            return;
        }
        self.scale = self.scale * factor;
        if self.scale < F::of(1e-9) {
            let s = self.scale;
            self.v.iter_mut().for_each(|v| *v = *v * s);
            self.scale = F::one();
        }
    }

    /// Clips the touched weights by the penalty they have not yet received.
    fn apply_l1(&mut self, x: &SparseVector<F>) {
        for &i in x.indices() {
            let i = i as usize;
            let z = self.scale * self.v[i];
            let q = self.l1_applied[i];
            let w = if z > F::zero() {
                (z - (self.l1_total + q)).max(F::zero())
            } else if z < F::zero() {
                (z + (self.l1_total - q)).min(F::zero())
            } else {
                continue;
            };
            self.v[i] = w / self.scale;
            self.l1_applied[i] = q + (w - z);
        }
    }

    fn penalty(&self, l2: f64, l1: f64) -> f64 {
        let s = self.scale.as_f64();
        let (sq, abs) = self
            .v
            .iter()
            .fold((0.0, 0.0), |(sq, abs), v| {
                let w = s * v.as_f64();
                (sq + w * w, abs + w.abs())
            });
        0.5 * l2 * sq + l1 * abs
    }

    fn into_dense(self) -> Vec<F> {
        let s = self.scale;
        self.v.into_iter().map(|v| v * s).collect()
    }
}

/// One SGD problem: a binary one-vs-rest model or the softmax model.
trait Problem<F: Scalar> {
    fn step(&mut self, batch: &[usize], eta: F, l2: F, l1: F);
    fn objective(&self, idx: &[usize], l2: f64, l1: f64) -> f64;
    fn accuracy(&self, idx: &[usize]) -> f64;
}

struct Binary<'a, F: Scalar> {
    x: &'a [SparseVector<F>],
    y: Vec<F>,
    loss: Loss,
    w: ScaledWeights<F>,
    b: F,
}

impl<F: Scalar> Problem<F> for Binary<'_, F> {
    fn step(&mut self, batch: &[usize], eta: F, l2: F, l1: F) {
        let ds: Vec<F> = batch
            .iter()
            .map(|&i| self.loss.binary_derivative(self.w.dot(&self.x[i]) + self.b, self.y[i]))
            .collect();
        if l2 > F::zero() {
            self.w.decay(F::one() - eta * l2);
        }
        let inv = F::one() / F::of(batch.len() as f64);
        for (&i, &d) in batch.iter().zip(&ds) {
            if !d.is_zero() {
                let coef = -eta * d * inv;
                self.w.add(&self.x[i], coef);
                self.b = self.b + coef;
            }
        }
        if l1 > F::zero() {
            self.w.l1_total = self.w.l1_total + eta * l1;
            for &i in batch {
                self.w.apply_l1(&self.x[i]);
            }
        }
    }

    fn objective(&self, idx: &[usize], l2: f64, l1: f64) -> f64 {
        let total: f64 = idx
            .iter()
            .map(|&i| self.loss.binary(self.w.dot(&self.x[i]) + self.b, self.y[i]).as_f64())
            .sum();
        total / idx.len().max(1) as f64 + self.w.penalty(l2, l1)
    }

    fn accuracy(&self, idx: &[usize]) -> f64 {
        let hits = idx
            .iter()
            .filter(|&&i| {
                let s = self.w.dot(&self.x[i]) + self.b;
                (s > F::zero()) == (self.y[i] > F::zero())
            })
            .count();
        hits as f64 / idx.len().max(1) as f64
    }
}

struct Softmax<'a, F: Scalar> {
    x: &'a [SparseVector<F>],
    codes: &'a [usize],
    w: Vec<ScaledWeights<F>>,
    b: Vec<F>,
}

impl<F: Scalar> Softmax<'_, F> {
    fn scores(&self, x: &SparseVector<F>) -> Vec<F> {
        self.w.iter().zip(&self.b).map(|(w, &b)| w.dot(x) + b).collect()
    }
}

impl<F: Scalar> Problem<F> for Softmax<'_, F> {
    fn step(&mut self, batch: &[usize], eta: F, l2: F, l1: F) {
        let ds: Vec<Vec<F>> = batch
            .iter()
            .map(|&i| super::loss::softmax_derivative(&self.scores(&self.x[i]), self.codes[i]))
            .collect();
        if l2 > F::zero() {
            for w in &mut self.w {
                w.decay(F::one() - eta * l2);
            }
        }
        let inv = F::one() / F::of(batch.len() as f64);
        for (&i, d) in batch.iter().zip(&ds) {
            for (k, &dk) in d.iter().enumerate() {
                if !dk.is_zero() {
                    let coef = -eta * dk * inv;
                    self.w[k].add(&self.x[i], coef);
                    self.b[k] = self.b[k] + coef;
                }
            }
        }
        if l1 > F::zero() {
            for w in &mut self.w {
                w.l1_total = w.l1_total + eta * l1;
                for &i in batch {
                    w.apply_l1(&self.x[i]);
                }
            }
        }
    }

    fn objective(&self, idx: &[usize], l2: f64, l1: f64) -> f64 {
        let total: f64 = idx
            .iter()
            .map(|&i| super::loss::softmax_loss(&self.scores(&self.x[i]), self.codes[i]).as_f64())
            .sum();
        let penalty: f64 = self.w.iter().map(|w| w.penalty(l2, l1)).sum();
        total / idx.len().max(1) as f64 + penalty
    }

    fn accuracy(&self, idx: &[usize]) -> f64 {
        let hits = idx
            .iter()
            .filter(|&&i| super::argmax(&self.scores(&self.x[i])) == self.codes[i])
            .count();
        hits as f64 / idx.len().max(1) as f64
    }
}

struct RunSummary {
    epochs: usize,
    history: Vec<f64>,
}

/// Epoch loop shared by both problem kinds.
///
/// With a validation set, stops once validation accuracy has failed to beat
/// the best seen by `tol` for `patience` epochs in a row; otherwise the same
/// rule is applied to the training objective.
fn run_epochs<F: Scalar, P: Problem<F>>(
    problem: &mut P,
    train: &[usize],
    validation: &[usize],
    cfg: &TrainConfig,
    alpha: f64,
    seed: u64,
) -> RunSummary {
    let (l2, l1) = cfg.penalty_strengths(alpha);
    let (l2f, l1f) = (F::of(l2), F::of(l1));
    let mut rng = seeded(seed);
    let mut order: Vec<usize> = train.to_vec();
    let mut t: u64 = 0;
    let mut history = Vec::new();
    let mut best = f64::NEG_INFINITY;
    let mut stale = 0;
    let use_validation = cfg.early_stopping && !validation.is_empty();
    for epoch in 1..=cfg.max_epochs {
        if cfg.shuffle {
            order = permutation(train.len(), &mut rng).into_iter().map(|i| train[i]).collect();
        }
        for batch in order.chunks(cfg.batch_size) {
            let eta = match cfg.learning_rate {
                LearningRate::Decaying => cfg.eta0 / (1.0 + cfg.eta0 * alpha * t as f64),
                LearningRate::Constant => cfg.eta0,
            };
            problem.step(batch, F::of(eta), l2f, l1f);
            t += 1;
        }
        let objective = problem.objective(train, l2, l1);
        history.push(objective);
        // both criteria are phrased as "higher is better"
        let score = if use_validation {
            problem.accuracy(validation)
        } else {
            -objective
        };
        if !score.is_finite() {
            return RunSummary { epochs: epoch, history };
        }
        if score < best + cfg.tol {
            stale += 1;
        } else {
            stale = 0;
        }
        if score > best {
            best = score;
        }
        if stale >= cfg.patience {
            return RunSummary { epochs: epoch, history };
        }
    }
    RunSummary {
        epochs: cfg.max_epochs,
        history,
    }
}

/// Holds out a stratified `fraction` of each class, keeping at least one
/// training sample per class.
fn validation_split(codes: &[usize], n_classes: usize, fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = seeded(seed);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (i, &c) in codes.iter().enumerate() {
        by_class[c].push(i);
    }
    let mut held = vec![false; codes.len()];
    for members in &by_class {
        let n = members.len();
        let take = ((fraction * n as f64).round_ties_even() as usize).min(n.saturating_sub(1));
        for &j in permutation(n, &mut rng).iter().take(take) {
            held[members[j]] = true;
        }
    }
    (0..codes.len()).partition(|&i| !held[i])
}

/// Trains a linear classifier with SGD.
///
/// `dim` is the feature-space dimension; every vector must fit inside it.
/// Classes are the distinct labels of `y` in sorted order. Output is
/// bit-identical for a fixed seed and input.
pub fn train_sgd<F: Scalar>(
    x: &[SparseVector<F>],
    y: &[VarietyLabel],
    dim: usize,
    config: &TrainConfig,
) -> Result<LinearModel<F>> {
    config.validate()?;
    if x.len() != y.len() {
        return Err(ModelError::DimensionMismatch(format!(
            "{} vectors but {} labels",
            x.len(),
            y.len()
        )));
    }
    if x.is_empty() {
        return Err(ModelError::EmptyInput);
    }
    if let Some(v) = x.iter().find(|v| v.min_dim() > dim) {
        return Err(ModelError::DimensionMismatch(format!(
            "feature index {} in a {dim}-dimensional space",
            v.min_dim() - 1
        )));
    }
    let (classes, codes) = encode_labels(y);
    if classes.len() < 2 {
        return Err(ModelError::SingleClassInput);
    }
    let alpha = config.effective_alpha(x.len());
    let (train, validation) = if config.early_stopping {
        validation_split(&codes, classes.len(), config.validation_fraction, config.seed)
    } else {
        ((0..x.len()).collect(), Vec::new())
    };
    let with_l1 = config.penalty_strengths(alpha).1 > 0.0;

    let (weights, intercepts, runs, scheme) = if config.loss.is_one_vs_rest() {
        let results: Vec<(Vec<F>, F, RunSummary)> = (0..classes.len())
            .into_par_iter()
            .map(|k| {
                let y_bin = codes
                    .iter()
                    .map(|&c| if c == k { F::one() } else { -F::one() })
                    .collect();
                let mut problem = Binary {
                    x,
                    y: y_bin,
                    loss: config.loss,
                    w: ScaledWeights::new(dim, with_l1),
                    b: F::zero(),
                };
                let run = run_epochs(&mut problem, &train, &validation, config, alpha, config.seed.wrapping_add(k as u64));
                (problem.w.into_dense(), problem.b, run)
            })
            .collect();
        let mut weights = Vec::new();
        let mut intercepts = Vec::new();
        let mut runs = Vec::new();
        for (w, b, run) in results {
            weights.push(w);
            intercepts.push(b);
            runs.push(run);
        }
        (weights, intercepts, runs, MulticlassScheme::OneVsRest)
    } else {
        let mut problem = Softmax {
            x,
            codes: &codes,
            w: (0..classes.len()).map(|_| ScaledWeights::new(dim, with_l1)).collect(),
            b: vec![F::zero(); classes.len()],
        };
        let run = run_epochs(&mut problem, &train, &validation, config, alpha, config.seed);
        let weights = problem.w.into_iter().map(ScaledWeights::into_dense).collect();
        (weights, problem.b, vec![run], MulticlassScheme::Multinomial)
    };

    let final_objective = runs.iter().filter_map(|r| r.history.last()).sum();
    Ok(LinearModel {
        classes,
        scheme,
        weights,
        intercepts,
        feature_space_id: String::new(),
        train_meta: TrainMeta {
            config: config.clone(),
            effective_alpha: alpha,
            n_samples: x.len(),
            n_validation: validation.len(),
            epochs: runs.iter().map(|r| r.epochs).collect(),
            objective_history: runs.into_iter().map(|r| r.history).collect(),
            final_objective,
        },
    })
}
