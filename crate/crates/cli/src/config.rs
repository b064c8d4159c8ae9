//! Experiment configuration files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use idiomid::corpus::{ArtifactRule, LabelSet, SplitSpec};
use idiomid::masking::MaskingPolicy;
use idiomid::pipeline::{ModelSpec, PipelineConfig};
use idiomid::tuning::Objective;
use serde::{Deserialize, Serialize};

use crate::error::{fail, CliResult, Exit, OrExit};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Training corpora, concatenated in order.
    pub train: Vec<PathBuf>,
    /// Named evaluation corpora.
    pub eval: BTreeMap<String, PathBuf>,
    /// Optional `id<TAB>label` corrections.
    pub relabel: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CleaningConfig {
    pub rules: Vec<ArtifactRule>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaskingConfig {
    pub enabled: bool,
    /// Span annotations from an entity tagger.
    pub spans: Option<PathBuf>,
    /// Alternatively, a list of names to mask wherever they occur.
    pub gazetteer: Option<PathBuf>,
    pub policy: MaskingPolicy,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchFamily {
    #[default]
    Svm,
    Logistic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    /// Search-space file; the built-in space of `family` when absent.
    pub space: Option<PathBuf>,
    pub family: SearchFamily,
    pub n_iter: usize,
    pub folds: usize,
    pub objective: Objective,
    /// Stratified fraction of the training set to search on.
    pub subsample: Option<f64>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            space: None,
            family: SearchFamily::Svm,
            n_iter: 40,
            folds: 5,
            objective: Objective::MacroF1,
            subsample: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    #[serde(default)]
    pub labels: LabelSet,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub cleaning: CleaningConfig,
    #[serde(default)]
    pub masking: MaskingConfig,
    /// Splits carved out of the prepared training pool.
    #[serde(default)]
    pub splits: Vec<SplitSpec>,
    #[serde(default)]
    pub pipeline: PipelineConfig,
    #[serde(default)]
    pub search: SearchConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Overrides the seeds of training, splits and search.
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_seed() -> u64 {
    idiomid::rng::DEFAULT_SEED
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            labels: LabelSet::default(),
            data: DataConfig::default(),
            cleaning: CleaningConfig::default(),
            masking: MaskingConfig::default(),
            splits: Vec::new(),
            pipeline: PipelineConfig::default(),
            search: SearchConfig::default(),
            output_dir: default_output_dir(),
            seed: default_seed(),
            base_dir: PathBuf::from("."),
        }
    }
}

/// True when the model section sets both `C` and `alpha`.
fn sets_c_and_alpha(raw: &serde_json::Value) -> bool {
    raw.pointer("/pipeline/model")
        .and_then(|m| m.as_object())
        .is_some_and(|m| (m.contains_key("C") || m.contains_key("c")) && m.contains_key("alpha"))
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))
            .or_exit(Exit::Usage)?;
        let raw: serde_json::Value = serde_json::from_str(&text)
            .with_context(|| format!("config {} is not valid JSON", path.display()))
            .or_exit(Exit::Usage)?;
        let mut cfg: Self = serde_json::from_value(raw.clone())
            .with_context(|| format!("invalid config {}", path.display()))
            .or_exit(Exit::Usage)?;
        if cfg.version != CONFIG_VERSION {
            return fail(
                Exit::Usage,
                format!("config version {} is not supported (expected {CONFIG_VERSION})", cfg.version),
            );
        }
        if sets_c_and_alpha(&raw) {
            log::warn!("config sets both C and alpha; C takes precedence");
        }
        cfg.base_dir = path.parent().map(Path::to_owned).unwrap_or_default();
        Ok(cfg)
    }

    /// Applies the top-level seed everywhere a seed is consumed.
    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(seed) = seed {
            self.seed = seed;
        }
        if let ModelSpec::Sgd(t) = &mut self.pipeline.model {
            t.seed = self.seed;
        }
        for s in &mut self.splits {
            s.seed = self.seed;
        }
        self
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_owned()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn output_dir(&self, flag: Option<&Path>) -> PathBuf {
        match flag {
            Some(p) => p.to_owned(),
            None => self.resolve(&self.output_dir),
        }
    }

    /// The config as echoed into output artifacts.
    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg: ExperimentConfig = serde_json::from_str(r#"{"version": 1}"#).unwrap();
        assert_eq!(cfg.labels, LabelSet::romansh());
        assert_eq!(cfg.search.n_iter, 40);
        assert_eq!(cfg.seed, 42);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"version": 1, "sed": 3}"#).is_err());
    }

    #[test]
    fn detects_c_with_alpha() {
        let raw: serde_json::Value =
            serde_json::from_str(r#"{"pipeline": {"model": {"kind": "sgd", "C": 1.0, "alpha": 0.1}}}"#).unwrap();
        assert!(sets_c_and_alpha(&raw));
    }

    #[test]
    fn seed_flag_propagates() {
        let mut cfg = ExperimentConfig::default();
        cfg.splits.push(SplitSpec::balanced("dev", LabelSet::romansh().labels(), 1, 1));
        let cfg = cfg.with_seed(Some(7));
        let ModelSpec::Sgd(t) = &cfg.pipeline.model else { panic!() };
        assert_eq!((cfg.seed, t.seed, cfg.splits[0].seed), (7, 7, 7));
    }
}
