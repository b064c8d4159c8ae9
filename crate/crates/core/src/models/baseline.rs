use serde::{Deserialize, Serialize};

use super::{encode_labels, Classifier, ModelError, Result};
use crate::corpus::VarietyLabel;
use crate::features::SparseVector;
use crate::Scalar;

/// Predicts the most frequent training label for every input.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MajorityModel {
    pub classes: Vec<VarietyLabel>,
    pub majority: usize,
}

impl MajorityModel {
    pub fn label(&self) -> &VarietyLabel {
        &self.classes[self.majority]
    }
}

impl<F: Scalar> Classifier<F> for MajorityModel {
    fn classes(&self) -> &[VarietyLabel] {
        &self.classes
    }

    fn decision_scores(&self, _x: &SparseVector<F>) -> Result<Vec<F>> {
        Ok((0..self.classes.len())
            .map(|k| if k == self.majority { F::one() } else { F::zero() })
            .collect())
    }
}

/// Majority-class baseline; ties go to the lexicographically smallest label.
pub fn majority_baseline(labels: &[VarietyLabel]) -> Result<MajorityModel> {
    if labels.is_empty() {
        return Err(ModelError::EmptyInput);
    }
    let (classes, codes) = encode_labels(labels);
    let mut counts = vec![0usize; classes.len()];
    for c in codes {
        counts[c] += 1;
    }
    // classes are sorted, so the first maximum is the smallest label
    let majority = (0..counts.len()).fold(0, |best, k| if counts[k] > counts[best] { k } else { best });
    Ok(MajorityModel { classes, majority })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(names: &[&str]) -> Vec<VarietyLabel> {
        names.iter().map(|&n| n.into()).collect()
    }

    #[test]
    fn most_frequent_label_wins() {
        let m = majority_baseline(&labels(&["VA", "RG", "RG", "SU"])).unwrap();
        assert_eq!(m.label().as_str(), "RG");
        let x = SparseVector::<f64>::from_pairs(vec![(3, 1.0)]);
        assert_eq!(m.predict(&x).unwrap().as_str(), "RG");
    }

    #[test]
    fn ties_go_to_smallest_label() {
        let m = majority_baseline(&labels(&["VA", "SU", "VA", "SU", "ST"])).unwrap();
        assert_eq!(m.label().as_str(), "SU");
        assert!(majority_baseline(&[]).is_err());
    }
}
