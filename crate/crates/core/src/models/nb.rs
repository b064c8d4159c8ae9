//! Multinomial and complement naive Bayes.

use serde::{Deserialize, Serialize};

use super::{check_dim, encode_labels, Classifier, ModelError, Result};
use crate::corpus::VarietyLabel;
use crate::features::{FeatureSpace, SparseVector};
use crate::Scalar;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NbVariant {
    #[default]
    Multinomial,
    /// Scores each class by how badly the other classes explain the input.
    Complement,
    /// Complement NB with per-class weight normalization.
    ComplementNormalized,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct NBModel<F: Scalar> {
    pub classes: Vec<VarietyLabel>,
    pub variant: NbVariant,
    pub alpha: f64,
    pub class_log_prior: Vec<F>,
    /// Per-class feature log-probabilities. For the complement variants
    /// these are the complement estimates `log P(t | not c)`.
    pub feature_log_prob: Vec<Vec<F>>,
    /// Per-class feature weights used for scoring.
    pub weights: Vec<Vec<F>>,
    pub feature_space_id: String,
}

impl<F: Scalar> NBModel<F> {
    pub fn dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn bind(&mut self, space: &FeatureSpace<F>) {
        self.feature_space_id = space.fingerprint();
    }

    /// Smoothed `P(feature | class)` (or `P(feature | not class)` for the
    /// complement variants).
    pub fn likelihood(&self, class: usize, feature: usize) -> F {
        self.feature_log_prob[class][feature].exp()
    }
}

impl<F: Scalar> Classifier<F> for NBModel<F> {
    fn classes(&self) -> &[VarietyLabel] {
        &self.classes
    }

    fn decision_scores(&self, x: &SparseVector<F>) -> Result<Vec<F>> {
        check_dim(x, self.dim())?;
        let with_prior = self.variant == NbVariant::Multinomial;
        Ok(self
            .weights
            .iter()
            .zip(&self.class_log_prior)
            .map(|(w, &prior)| {
                let s = x.dot(w);
                if with_prior {
                    s + prior
                } else {
                    s
                }
            })
            .collect())
    }
}

/// Fits naive Bayes with additive smoothing `alpha` on non-negative
/// feature values (raw counts, TF or TF-IDF).
pub fn train_nb<F: Scalar>(
    x: &[SparseVector<F>],
    y: &[VarietyLabel],
    dim: usize,
    variant: NbVariant,
    alpha: f64,
) -> Result<NBModel<F>> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(ModelError::InvalidConfig("naive Bayes alpha must be positive".into()));
    }
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
    let (classes, codes) = encode_labels(y);
    if classes.len() < 2 {
        return Err(ModelError::SingleClassInput);
    }
    let k = classes.len();
    let mut counts = vec![vec![0.0f64; dim]; k];
    let mut class_n = vec![0usize; k];
    for (v, &c) in x.iter().zip(&codes) {
        if v.min_dim() > dim {
            return Err(ModelError::DimensionMismatch(format!(
                "feature index {} in a {dim}-dimensional space",
                v.min_dim() - 1
            )));
        }
        class_n[c] += 1;
        for (i, val) in v.iter() {
            let val = val.as_f64();
            if val < 0.0 {
                return Err(ModelError::NegativeFeatureValue { index: i, value: val });
            }
            counts[c][i] += val;
        }
    }
    let n = x.len() as f64;
    let class_log_prior = class_n.iter().map(|&m| F::of((m as f64 / n).ln())).collect();

    let log_normalize = |row: &[f64]| -> Vec<f64> {
        let total: f64 = row.iter().map(|c| c + alpha).sum();
        row.iter().map(|c| ((c + alpha) / total).ln()).collect()
    };
    let (feature_log_prob, weights): (Vec<Vec<f64>>, Vec<Vec<f64>>) = match variant {
        NbVariant::Multinomial => counts
            .iter()
            .map(|row| {
                let lp = log_normalize(row);
                (lp.clone(), lp)
            })
            .unzip(),
        NbVariant::Complement | NbVariant::ComplementNormalized => {
            let all: Vec<f64> = (0..dim).map(|i| counts.iter().map(|r| r[i]).sum()).collect();
            counts
                .iter()
                .map(|row| {
                    let complement: Vec<f64> = all.iter().zip(row).map(|(a, c)| a - c).collect();
                    let lp = log_normalize(&complement);
                    let w = if variant == NbVariant::ComplementNormalized {
                        let sum: f64 = lp.iter().sum();
                        lp.iter().map(|l| l / sum).collect()
                    } else {
                        lp.iter().map(|l| -l).collect()
                    };
                    (lp, w)
                })
                .unzip()
        }
    };
    let cast = |rows: Vec<Vec<f64>>| -> Vec<Vec<F>> {
        rows.into_iter().map(|r| r.into_iter().map(F::of).collect()).collect()
    };
    Ok(NBModel {
        classes,
        variant,
        alpha,
        class_log_prior,
        feature_log_prob: cast(feature_log_prob),
        weights: cast(weights),
        feature_space_id: String::new(),
    })
}
