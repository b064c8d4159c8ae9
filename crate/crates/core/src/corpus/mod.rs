//! Labeled text corpora: loading, cleaning, deduplication and split
//! construction.

mod clean;
mod dedup;
mod io;
mod split;
mod stats;

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use clean::{clean_text, ArtifactRule, CleanPolicy, Cleaner};
pub use dedup::{dedup_intra_class, route_cross_class_duplicates};
pub use io::{
    load_corpus, load_relabel_patch, parse_corpus, write_jsonl, CorpusFormat, RelabelPatch,
};
pub use split::{
    build_split, build_split_with_rest, stratified_subsample, SplitManifest, SplitManifestEntry,
    SplitSpec,
};
pub use stats::{CorpusStats, StatsRow};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}:{line}: malformed record: {reason}")]
    MalformedRecord {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("{location}: unknown label {label:?}")]
    UnknownLabel { location: String, label: String },
    #[error("{}: file contains no records", .0.display())]
    EmptyFile(PathBuf),
    #[error("insufficient samples for label {label}: have {have}, need {need}")]
    InsufficientSamples {
        label: VarietyLabel,
        have: usize,
        need: usize,
    },
    #[error("class {0} would be empty after subsampling")]
    EmptyClassAfterSubsample(VarietyLabel),
    #[error("fraction must lie in (0, 1], got {0}")]
    InvalidFraction(f64),
    #[error("invalid split spec {name:?}: {reason}")]
    InvalidSplitSpec { name: String, reason: String },
    #[error("invalid cleaning rule {pattern:?}: {source}")]
    InvalidRule {
        pattern: String,
        #[source]
        source: regex::Error,
    },
    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("label set must be non-empty and free of duplicates")]
    InvalidLabelSet,
}

pub type Result<T, E = CorpusError> = std::result::Result<T, E>;

/// Name of one variety in a closed label set. Compared by exact string equality.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VarietyLabel(String);

impl VarietyLabel {
    pub fn new(name: impl Into<String>) -> Self {
        Self(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for VarietyLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for VarietyLabel {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

/// The five Romansh idioms plus Rumantsch Grischun.
pub const ROMANSH_VARIETIES: [&str; 6] =
    ["Sursilvan", "Sutsilvan", "Surmiran", "Puter", "Vallader", "RG"];

/// Ordered, closed set of labels a corpus may use.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<VarietyLabel>", into = "Vec<VarietyLabel>")]
pub struct LabelSet(Vec<VarietyLabel>);

impl LabelSet {
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<VarietyLabel> = names.into_iter().map(VarietyLabel::new).collect();
        Self::try_from(labels)
    }

    pub fn romansh() -> Self {
        Self(ROMANSH_VARIETIES.iter().map(|&s| VarietyLabel::from(s)).collect())
    }

    pub fn contains(&self, label: &str) -> bool {
        self.0.iter().any(|l| l.as_str() == label)
    }

    pub fn get(&self, label: &str) -> Option<&VarietyLabel> {
        self.0.iter().find(|l| l.as_str() == label)
    }

    pub fn index_of(&self, label: &VarietyLabel) -> Option<usize> {
        self.0.iter().position(|l| l == label)
    }

    pub fn labels(&self) -> &[VarietyLabel] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Default for LabelSet {
    fn default() -> Self {
        Self::romansh()
    }
}

impl TryFrom<Vec<VarietyLabel>> for LabelSet {
    type Error = CorpusError;

    fn try_from(labels: Vec<VarietyLabel>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        if labels.is_empty() || !labels.iter().all(|l| seen.insert(l.clone())) {
            return Err(CorpusError::InvalidLabelSet);
        }
        Ok(Self(labels))
    }
}

impl From<LabelSet> for Vec<VarietyLabel> {
    fn from(set: LabelSet) -> Self {
        set.0
    }
}

/// Number of maximal non-whitespace runs in `text`.
pub fn whitespace_token_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// One labeled text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sample {
    pub id: String,
    pub label: VarietyLabel,
    pub source: String,
    pub text: String,
    token_count: usize,
}

impl Sample {
    pub fn new(
        id: impl Into<String>,
        text: impl Into<String>,
        label: VarietyLabel,
        source: impl Into<String>,
    ) -> Self {
        let text = text.into();
        let token_count = whitespace_token_count(&text);
        Self {
            id: id.into(),
            label,
            source: source.into(),
            text,
            token_count,
        }
    }

    pub fn token_count(&self) -> usize {
        self.token_count
    }

    /// Replaces the text, keeping the token count in sync.
    pub fn with_text(mut self, text: String) -> Self {
        self.token_count = whitespace_token_count(&text);
        self.text = text;
        self
    }

    /// True when the text is non-empty after trimming and has a letter.
    pub fn is_well_formed(&self) -> bool {
        !self.text.trim().is_empty() && self.text.chars().any(char::is_alphabetic)
    }
}

/// Ordered samples over a closed label set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledCorpus {
    samples: Vec<Sample>,
    label_set: LabelSet,
}

impl LabeledCorpus {
    pub fn new(samples: Vec<Sample>, label_set: LabelSet) -> Result<Self> {
        if let Some(bad) = samples.iter().find(|s| !label_set.contains(s.label.as_str())) {
            return Err(CorpusError::UnknownLabel {
                location: format!("sample {}", bad.id),
                label: bad.label.to_string(),
            });
        }
        Ok(Self { samples, label_set })
    }

    pub fn empty(label_set: LabelSet) -> Self {
        Self {
            samples: Vec::new(),
            label_set,
        }
    }

    pub(crate) fn from_parts_unchecked(samples: Vec<Sample>, label_set: LabelSet) -> Self {
        Self { samples, label_set }
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Sample> {
        self.samples
    }

    pub fn label_set(&self) -> &LabelSet {
        &self.label_set
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.samples.iter().map(|s| s.text.as_str())
    }

    pub fn labels(&self) -> Vec<VarietyLabel> {
        self.samples.iter().map(|s| s.label.clone()).collect()
    }

    pub fn total_tokens(&self) -> usize {
        self.samples.iter().map(Sample::token_count).sum()
    }

    /// Sample count per label, in label-set order, including zero counts.
    pub fn label_counts(&self) -> BTreeMap<VarietyLabel, usize> {
        let mut counts: BTreeMap<VarietyLabel, usize> = self
            .label_set
            .labels()
            .iter()
            .map(|l| (l.clone(), 0))
            .collect();
        for s in &self.samples {
            *counts.entry(s.label.clone()).or_default() += 1;
        }
        counts
    }

    /// Keeps the samples at `indices`, in the given order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            label_set: self.label_set.clone(),
        }
    }

    pub fn filter<F: FnMut(&Sample) -> bool>(&self, mut keep: F) -> Self {
        Self {
            samples: self.samples.iter().filter(|s| keep(s)).cloned().collect(),
            label_set: self.label_set.clone(),
        }
    }

    /// Concatenates corpora sharing a label set.
    pub fn concat(parts: Vec<LabeledCorpus>, label_set: LabelSet) -> Result<Self> {
        let samples = parts.into_iter().flat_map(|c| c.samples).collect();
        Self::new(samples, label_set)
    }

    /// Cleans every text under `policy`, dropping rejected samples.
    pub fn clean(&self, cleaner: &Cleaner, policy: CleanPolicy) -> Self {
        let samples = self
            .samples
            .iter()
            .filter_map(|s| {
                cleaner
                    .clean(&s.text, policy)
                    .map(|text| s.clone().with_text(text))
            })
            .collect();
        Self {
            samples,
            label_set: self.label_set.clone(),
        }
    }

    /// Applies manual label corrections keyed by sample id.
    pub fn relabel(&self, patch: &RelabelPatch) -> Result<Self> {
        let samples = self
            .samples
            .iter()
            .map(|s| match patch.get(&s.id) {
                Some(label) => {
                    let mut s = s.clone();
                    s.label = label.clone();
                    s
                }
                None => s.clone(),
            })
            .collect();
        Self::new(samples, self.label_set.clone())
    }
}
