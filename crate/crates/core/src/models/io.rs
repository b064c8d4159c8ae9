//! Versioned JSON model files.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Classifier, LinearModel, MajorityModel, ModelError, NBModel, Result};
use crate::corpus::VarietyLabel;
use crate::features::{FeatureSpace, SparseVector, Weighting};
use crate::Scalar;

const FORMAT_NAME: &str = "idiomid-model";
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "")]
pub enum Model<F: Scalar> {
    Linear(LinearModel<F>),
    NaiveBayes(NBModel<F>),
    Majority(MajorityModel),
}

impl<F: Scalar> Classifier<F> for Model<F> {
    fn classes(&self) -> &[VarietyLabel] {
        match self {
            Model::Linear(m) => m.classes(),
            Model::NaiveBayes(m) => m.classes(),
            Model::Majority(m) => <MajorityModel as Classifier<F>>::classes(m),
        }
    }

    fn decision_scores(&self, x: &SparseVector<F>) -> Result<Vec<F>> {
        match self {
            Model::Linear(m) => m.decision_scores(x),
            Model::NaiveBayes(m) => m.decision_scores(x),
            Model::Majority(m) => m.decision_scores(x),
        }
    }
}

/// Which feature space a model file expects.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpaceBinding {
    /// Location of the feature-space file, relative to the model file.
    pub path: Option<String>,
    pub fingerprint: String,
    pub dim: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ModelFile<F: Scalar> {
    pub format: String,
    pub format_version: u32,
    pub scalar: String,
    pub feature_space: FeatureSpaceBinding,
    pub weighting: Weighting,
    pub model: Model<F>,
    /// Free-form provenance, e.g. the effective experiment config.
    #[serde(default)]
    pub metadata: serde_json::Value,
}

impl<F: Scalar> ModelFile<F> {
    pub fn new(model: Model<F>, space: &FeatureSpace<F>, space_path: Option<String>, weighting: Weighting) -> Self {
        let fingerprint = space.fingerprint();
        let model = match model {
            Model::Linear(mut m) => {
                m.feature_space_id = fingerprint.clone();
                Model::Linear(m)
            }
            Model::NaiveBayes(mut m) => {
                m.feature_space_id = fingerprint.clone();
                Model::NaiveBayes(m)
            }
            other => other,
        };
        Self {
            format: FORMAT_NAME.to_owned(),
            format_version: MODEL_FORMAT_VERSION,
            scalar: F::NAME.to_owned(),
            feature_space: FeatureSpaceBinding {
                path: space_path,
                fingerprint,
                dim: space.dim(),
            },
            weighting,
            model,
            metadata: serde_json::Value::Null,
        }
    }

    /// Fails unless `space` is the one the model was trained on.
    pub fn check_space(&self, space: &FeatureSpace<F>) -> Result<()> {
        let found = space.fingerprint();
        if found != self.feature_space.fingerprint {
            return Err(ModelError::FeatureSpaceMismatch(format!(
                "model expects feature space {}, got {found}",
                self.feature_space.fingerprint
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Header {
            format: String,
            format_version: u32,
            scalar: String,
        }
        let header: Header =
            serde_json::from_str(json).map_err(|e| ModelError::CorruptFile(e.to_string()))?;
        if header.format != FORMAT_NAME {
            return Err(ModelError::CorruptFile(format!("unexpected format {:?}", header.format)));
        }
        if header.format_version != MODEL_FORMAT_VERSION {
            return Err(ModelError::VersionMismatch {
                found: header.format_version,
                expected: MODEL_FORMAT_VERSION,
            });
        }
        if header.scalar != F::NAME {
            return Err(ModelError::CorruptFile(format!(
                "model stores {} weights, expected {}",
                header.scalar,
                F::NAME
            )));
        }
        serde_json::from_str(json).map_err(|e| ModelError::CorruptFile(e.to_string()))
    }
}

pub fn save_model<F: Scalar>(file: &ModelFile<F>, path: &Path) -> Result<()> {
    fs::write(path, file.to_json()).map_err(|source| ModelError::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn load_model<F: Scalar>(path: &Path) -> Result<ModelFile<F>> {
    let json = fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.to_owned(),
        source,
    })?;
    ModelFile::from_json(&json)
}
