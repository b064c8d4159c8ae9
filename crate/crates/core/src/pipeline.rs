//! Feature extraction plus classifier, fitted and applied as one unit.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::VarietyLabel;
use crate::features::{FeatureError, FeatureSpace, TokenizerConfig, Weighting};
use crate::models::{
    majority_baseline, train_nb, train_sgd, Classifier, Model, ModelError, ModelFile, NbVariant, TrainConfig,
};
use crate::Scalar;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Which classifier to fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Sgd(TrainConfig),
    NaiveBayes {
        #[serde(default)]
        variant: NbVariant,
        #[serde(default = "default_nb_alpha")]
        alpha: f64,
    },
    Majority,
}

fn default_nb_alpha() -> f64 {
    1.0
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec::Sgd(TrainConfig::default())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub features: TokenizerConfig,
    pub weighting: Weighting,
    pub model: ModelSpec,
}

impl PipelineConfig {
    /// Fits the vocabulary on `texts`, then the classifier on their vectors.
    pub fn fit<F: Scalar>(&self, texts: &[&str], labels: &[VarietyLabel]) -> Result<FittedPipeline<F>, PipelineError> {
        let space = FeatureSpace::<F>::fit(texts, &self.features)?;
        self.fit_in_space(space, texts, labels)
    }

    /// Fits only the classifier, on an already fitted feature space.
    pub fn fit_in_space<F: Scalar>(
        &self,
        space: FeatureSpace<F>,
        texts: &[&str],
        labels: &[VarietyLabel],
    ) -> Result<FittedPipeline<F>, PipelineError> {
        let x = space.transform_all(texts, self.weighting);
        let model = match &self.model {
            ModelSpec::Sgd(cfg) => Model::Linear(train_sgd(&x, labels, space.dim(), cfg)?),
            ModelSpec::NaiveBayes { variant, alpha } => {
                Model::NaiveBayes(train_nb(&x, labels, space.dim(), *variant, *alpha)?)
            }
            ModelSpec::Majority => Model::Majority(majority_baseline(labels)?),
        };
        Ok(FittedPipeline {
            space,
            model,
            weighting: self.weighting,
        })
    }
}

#[derive(Clone, Debug)]
pub struct FittedPipeline<F: Scalar> {
    pub space: FeatureSpace<F>,
    pub model: Model<F>,
    pub weighting: Weighting,
}

impl<F: Scalar> FittedPipeline<F> {
    pub fn predict(&self, texts: &[&str]) -> Result<Vec<VarietyLabel>, ModelError> {
        let x = self.space.transform_all(texts, self.weighting);
        self.model.predict_batch(&x)
    }

    pub fn into_model_file(self, space_path: Option<String>) -> (FeatureSpace<F>, ModelFile<F>) {
        let file = ModelFile::new(self.model, &self.space, space_path, self.weighting);
        (self.space, file)
    }
}
