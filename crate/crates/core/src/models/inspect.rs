use serde::{Deserialize, Serialize};

use super::{LinearModel, ModelError, Result};
use crate::corpus::VarietyLabel;
use crate::features::{FeatureSpace, Namespace};
use crate::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TopFeature<F: Scalar> {
    /// The n-gram without its namespace prefix.
    pub term: String,
    pub namespace: Namespace,
    pub index: usize,
    pub weight: F,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ClassFeatures<F: Scalar> {
    pub label: VarietyLabel,
    pub features: Vec<TopFeature<F>>,
}

/// The `k` highest-weighted features of every class, heaviest first.
/// Equal weights are ordered by feature index.
pub fn top_features<F: Scalar>(
    model: &LinearModel<F>,
    space: &FeatureSpace<F>,
    k: usize,
) -> Result<Vec<ClassFeatures<F>>> {
    if model.dim() != space.dim() {
        return Err(ModelError::FeatureSpaceMismatch(format!(
            "model has {} features, space has {}",
            model.dim(),
            space.dim()
        )));
    }
    let vocab = space.vocabulary();
    Ok(model
        .classes
        .iter()
        .zip(&model.weights)
        .map(|(label, w)| {
            let mut order: Vec<usize> = (0..w.len()).collect();
            order.sort_by(|&a, &b| w[b].partial_cmp(&w[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
            let features = order
                .into_iter()
                .take(k)
                .map(|i| {
                    let (namespace, gram) =
                        Namespace::split(vocab.term(i)).expect("vocabulary terms are namespaced");
                    TopFeature {
                        term: gram.to_owned(),
                        namespace,
                        index: i,
                        weight: w[i],
                    }
                })
                .collect();
            ClassFeatures {
                label: label.clone(),
                features,
            }
        })
        .collect())
}
