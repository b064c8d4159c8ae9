//! Named-entity masking: replaces entity spans with a placeholder token.
//!
//! Spans come either from an external annotation file (any NER system) or
//! from the built-in gazetteer matcher. Offsets are in Unicode codepoints,
//! end-exclusive.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{LabeledCorpus, Sample};

#[derive(Debug, Error)]
pub enum MaskError {
    #[error("span out of bounds for sample {0}")]
    SpanOutOfBounds(String),
    #[error("span references unknown sample {0}")]
    UnknownSample(String),
    #[error("invalid masking policy: {0}")]
    InvalidPolicy(String),
    #[error("{}:{line}: malformed span record: {reason}", path.display())]
    MalformedSpan {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = MaskError> = std::result::Result<T, E>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpanAnnotation {
    pub sample_id: String,
    pub start: usize,
    pub end: usize,
    pub score: f64,
}

/// Which spans get masked and what replaces them.
///
/// The defaults follow a conservative setup: score at least 0.98, spans of
/// two or more codepoints, standalone tokens only, and the dictionary
/// source (`PG`) exempt. The length floor is a tunable guess.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MaskingPolicy {
    pub placeholder: String,
    pub min_span_length: usize,
    pub min_score: f64,
    pub require_standalone: bool,
    pub exempt_sources: BTreeSet<String>,
}

impl Default for MaskingPolicy {
    fn default() -> Self {
        Self {
            placeholder: "$NE$".into(),
            min_span_length: 2,
            min_score: 0.98,
            require_standalone: true,
            exempt_sources: ["PG".to_owned()].into_iter().collect(),
        }
    }
}

impl MaskingPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.placeholder.is_empty() || self.placeholder.chars().any(char::is_whitespace) {
            return Err(MaskError::InvalidPolicy(
                "placeholder must be non-empty and contain no whitespace".into(),
            ));
        }
        if self.min_span_length == 0 {
            return Err(MaskError::InvalidPolicy("min_span_length must be positive".into()));
        }
        Ok(())
    }
}

/// True when `[start, end)` is not glued to a letter or digit on either side.
fn is_standalone(chars: &[char], start: usize, end: usize) -> bool {
    let before = start == 0 || !chars[start - 1].is_alphanumeric();
    let after = end == chars.len() || !chars[end].is_alphanumeric();
    before && after
}

/// Replaces every qualifying span with the placeholder.
///
/// A span qualifies when its length, score and standalone status pass the
/// policy and its sample's source is not exempt. Overlapping qualifying
/// spans are merged first, so span order does not matter. Sample count and
/// labels are unchanged.
pub fn apply_mask(
    corpus: &LabeledCorpus,
    spans: &[SpanAnnotation],
    policy: &MaskingPolicy,
) -> Result<LabeledCorpus> {
    policy.validate()?;
    let mut by_id: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, s) in corpus.samples().iter().enumerate() {
        by_id.entry(s.id.as_str()).or_default().push(i);
    }
    let mut per_sample: HashMap<usize, Vec<(usize, usize)>> = HashMap::new();
    for span in spans {
        let targets = by_id
            .get(span.sample_id.as_str())
            .ok_or_else(|| MaskError::UnknownSample(span.sample_id.clone()))?;
        for &i in targets {
            let sample = &corpus.samples()[i];
            let chars: Vec<char> = sample.text.chars().collect();
            if span.start >= span.end || span.end > chars.len() {
                return Err(MaskError::SpanOutOfBounds(span.sample_id.clone()));
            }
            let qualifies = span.end - span.start >= policy.min_span_length
                && span.score >= policy.min_score
                && !policy.exempt_sources.contains(&sample.source)
                && (!policy.require_standalone || is_standalone(&chars, span.start, span.end));
            if qualifies {
                per_sample.entry(i).or_default().push((span.start, span.end));
            }
        }
    }
    let samples = corpus
        .samples()
        .iter()
        .enumerate()
        .map(|(i, s)| match per_sample.get_mut(&i) {
            Some(ranges) => mask_sample(s, ranges, &policy.placeholder),
            None => s.clone(),
        })
        .collect();
    Ok(LabeledCorpus::new(samples, corpus.label_set().clone())
        .expect("labels are unchanged by masking"))
}

fn merge_ranges(ranges: &mut Vec<(usize, usize)>) -> Vec<(usize, usize)> {
    ranges.sort_unstable();
    let mut merged: Vec<(usize, usize)> = Vec::with_capacity(ranges.len());
    for &(start, end) in ranges.iter() {
        match merged.last_mut() {
            Some(last) if start < last.1 => last.1 = last.1.max(end),
            _ => merged.push((start, end)),
        }
    }
    merged
}

fn mask_sample(sample: &Sample, ranges: &mut Vec<(usize, usize)>, placeholder: &str) -> Sample {
    let merged = merge_ranges(ranges);
    let chars: Vec<char> = sample.text.chars().collect();
    let mut out = String::with_capacity(sample.text.len());
    let mut pos = 0;
    for (start, end) in merged {
        out.extend(&chars[pos..start]);
        out.push_str(placeholder);
        pos = end;
    }
    out.extend(&chars[pos..]);
    sample.clone().with_text(out)
}

/// Finds gazetteer entries in every sample, longest match first.
///
/// Matching is case-sensitive and scans left to right; at each position the
/// longest entry that matches (and is standalone, if the policy requires it)
/// wins and scanning resumes after it. Emitted spans have score 1.0.
pub fn gazetteer_mask(
    corpus: &LabeledCorpus,
    gazetteer: &HashSet<String>,
    policy: &MaskingPolicy,
) -> Vec<SpanAnnotation> {
    let mut by_first: HashMap<char, Vec<Vec<char>>> = HashMap::new();
    for entry in gazetteer.iter().filter(|e| !e.is_empty()) {
        let chars: Vec<char> = entry.chars().collect();
        by_first.entry(chars[0]).or_default().push(chars);
    }
    for entries in by_first.values_mut() {
        entries.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
    }
    let mut spans = Vec::new();
    for sample in corpus.samples() {
        let chars: Vec<char> = sample.text.chars().collect();
        let mut pos = 0;
        while pos < chars.len() {
            let hit = by_first.get(&chars[pos]).and_then(|entries| {
                entries.iter().find(|e| {
                    let end = pos + e.len();
                    end <= chars.len()
                        && chars[pos..end] == e[..]
                        && (!policy.require_standalone || is_standalone(&chars, pos, end))
                })
            });
            match hit {
                Some(e) => {
                    spans.push(SpanAnnotation {
                        sample_id: sample.id.clone(),
                        start: pos,
                        end: pos + e.len(),
                        score: 1.0,
                    });
                    pos += e.len();
                }
                None => pos += 1,
            }
        }
    }
    spans
}

/// Reads span annotations, one JSON object per line.
pub fn load_spans(path: &Path) -> Result<Vec<SpanAnnotation>> {
    let content = fs::read_to_string(path).map_err(|source| MaskError::Io {
        path: path.to_owned(),
        source,
    })?;
    content
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| MaskError::MalformedSpan {
                path: path.to_owned(),
                line: i + 1,
                reason: e.to_string(),
            })
        })
        .collect()
}

pub fn write_spans(path: &Path, spans: &[SpanAnnotation]) -> Result<()> {
    let io_err = |source| MaskError::Io {
        path: path.to_owned(),
        source,
    };
    let mut out = std::io::BufWriter::new(fs::File::create(path).map_err(io_err)?);
    for span in spans {
        writeln!(out, "{}", serde_json::to_string(span).expect("span serializes")).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

/// Reads a gazetteer, one entry per line. Blank lines are skipped.
pub fn load_gazetteer(path: &Path) -> Result<HashSet<String>> {
    let content = fs::read_to_string(path).map_err(|source| MaskError::Io {
        path: path.to_owned(),
        source,
    })?;
    Ok(content
        .lines()
        .map(|l| l.trim_end_matches('\r'))
        .filter(|l| !l.trim().is_empty())
        .map(str::to_owned)
        .collect())
}
