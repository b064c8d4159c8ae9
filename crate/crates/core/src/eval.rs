//! Classification metrics and confusion matrices.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::VarietyLabel;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("{truth} true labels but {predicted} predictions")]
    LengthMismatch { truth: usize, predicted: usize },
    #[error("label {0:?} is not in the configured label set")]
    UnknownLabel(String),
    #[error("label set is empty or has duplicates")]
    InvalidLabelSet,
}

pub type Result<T, E = EvalError> = std::result::Result<T, E>;

/// Counts of (true, predicted) pairs; rows are true classes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    labels: Vec<VarietyLabel>,
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn labels(&self) -> &[VarietyLabel] {
        &self.labels
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth][predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.labels.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_normalize(&self) -> Vec<Vec<f64>> {
        row_normalize(self)
    }

    /// CSV with a header row of predicted labels and one row per true label.
    pub fn to_csv(&self, normalized: bool) -> String {
        let mut out = String::from("true\\predicted");
        for l in &self.labels {
            out.push(',');
            out.push_str(l.as_str());
        }
        out.push('\n');
        let rows = self.row_normalize();
        for (i, l) in self.labels.iter().enumerate() {
            out.push_str(l.as_str());
            for j in 0..self.labels.len() {
                if normalized {
                    write!(out, ",{}", rows[i][j]).unwrap();
                } else {
                    write!(out, ",{}", self.counts[i][j]).unwrap();
                }
            }
            out.push('\n');
        }
        out
    }
}

fn index_labels(labels: &[VarietyLabel]) -> Result<HashMap<&str, usize>> {
    let index: HashMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    if labels.is_empty() || index.len() != labels.len() {
        return Err(EvalError::InvalidLabelSet);
    }
    Ok(index)
}

pub fn confusion(
    y_true: &[VarietyLabel],
    y_pred: &[VarietyLabel],
    labels: &[VarietyLabel],
) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(EvalError::LengthMismatch {
            truth: y_true.len(),
            predicted: y_pred.len(),
        });
    }
    let index = index_labels(labels)?;
    let lookup = |l: &VarietyLabel| {
        index
            .get(l.as_str())
            .copied()
            .ok_or_else(|| EvalError::UnknownLabel(l.to_string()))
    };
    let mut counts = vec![vec![0u64; labels.len()]; labels.len()];
    for (t, p) in y_true.iter().zip(y_pred) {
        counts[lookup(t)?][lookup(p)?] += 1;
    }
    Ok(ConfusionMatrix {
        labels: labels.to_vec(),
        counts,
    })
}

/// Divides each row by its sum; all-zero rows stay zero.
pub fn row_normalize(cm: &ConfusionMatrix) -> Vec<Vec<f64>> {
    cm.counts
        .iter()
        .map(|row| {
            let total: u64 = row.iter().sum();
            if total == 0 {
                vec![0.0; row.len()]
            } else {
                row.iter().map(|&c| c as f64 / total as f64).collect()
            }
        })
        .collect()
}

/// Which classes enter the macro averages.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MacroAverage {
    /// Only classes that occur in the true labels.
    #[default]
    PresentInTruth,
    /// Every configured label.
    AllLabels,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n_samples: u64,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub weighted_f1: f64,
    pub macro_recall: f64,
    pub macro_precision: f64,
    pub per_class: BTreeMap<VarietyLabel, ClassMetrics>,
    pub macro_average: MacroAverage,
    /// Number of precision, recall or F1 values that were undefined and set to 0.
    pub zero_division_warnings: usize,
}

/// `x` as a percentage with one decimal.
pub fn percent(x: f64) -> String {
    format!("{:.1}", 100.0 * x)
}

impl MetricsReport {
    pub fn from_confusion(cm: &ConfusionMatrix, macro_average: MacroAverage) -> Self {
        let k = cm.labels.len();
        let n = cm.total();
        let mut warnings = 0;
        let ratio = |num: u64, den: u64, warnings: &mut usize| {
            if den == 0 {
                *warnings += 1;
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        let mut per_class = BTreeMap::new();
        let mut rows = Vec::with_capacity(k);
        for c in 0..k {
            let tp = cm.counts[c][c];
            let support: u64 = cm.counts[c].iter().sum();
            let predicted: u64 = (0..k).map(|r| cm.counts[r][c]).sum();
            let precision = ratio(tp, predicted, &mut warnings);
            let recall = ratio(tp, support, &mut warnings);
            let f1 = if precision + recall == 0.0 {
                warnings += 1;
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            let m = ClassMetrics { precision, recall, f1, support };
            per_class.insert(cm.labels[c].clone(), m);
            rows.push(m);
        }
        let averaged: Vec<&ClassMetrics> = rows
            .iter()
            .filter(|m| macro_average == MacroAverage::AllLabels || m.support > 0)
            .collect();
        let mean = |f: fn(&ClassMetrics) -> f64| {
            if averaged.is_empty() {
                0.0
            } else {
                averaged.iter().map(|m| f(m)).sum::<f64>() / averaged.len() as f64
            }
        };
        let weighted_f1 = if n == 0 {
            0.0
        } else {
            rows.iter().map(|m| m.support as f64 / n as f64 * m.f1).sum()
        };
        Self {
            n_samples: n,
            accuracy: if n == 0 { 0.0 } else { cm.trace() as f64 / n as f64 },
            macro_f1: mean(|m| m.f1),
            weighted_f1,
            macro_recall: mean(|m| m.recall),
            macro_precision: mean(|m| m.precision),
            per_class,
            macro_average,
            zero_division_warnings: warnings,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Aligned plain-text table with one-decimal percentages.
    pub fn to_table(&self) -> String {
        let width = self
            .per_class
            .keys()
            .map(|l| l.as_str().chars().count())
            .max()
            .unwrap_or(0)
            .max("macro recall".len());
        let mut out = String::new();
        writeln!(out, "{:<width$}  {:>9}  {:>6}  {:>6}  {:>7}", "class", "precision", "recall", "F1", "support").unwrap();
        for (label, m) in &self.per_class {
            writeln!(
                out,
                "{:<width$}  {:>9}  {:>6}  {:>6}  {:>7}",
                label.as_str(),
                percent(m.precision),
                percent(m.recall),
                percent(m.f1),
                m.support
            )
            .unwrap();
        }
        out.push('\n');
        for (name, value) in [
            ("accuracy", self.accuracy),
            ("macro F1", self.macro_f1),
            ("weighted F1", self.weighted_f1),
            ("macro recall", self.macro_recall),
        ] {
            writeln!(out, "{name:<width$}  {:>9}", percent(value)).unwrap();
        }
        out
    }
}

pub fn metrics(y_true: &[VarietyLabel], y_pred: &[VarietyLabel], labels: &[VarietyLabel]) -> Result<MetricsReport> {
    metrics_with(y_true, y_pred, labels, MacroAverage::default())
}

pub fn metrics_with(
    y_true: &[VarietyLabel],
    y_pred: &[VarietyLabel],
    labels: &[VarietyLabel],
    macro_average: MacroAverage,
) -> Result<MetricsReport> {
    let cm = confusion(y_true, y_pred, labels)?;
    Ok(MetricsReport::from_confusion(&cm, macro_average))
}
