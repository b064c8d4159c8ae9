use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{CorpusError, Result};

/// Which cleaning steps apply.
///
/// `Train` strips markup and source artifacts; `Eval` only normalizes
/// whitespace and rejects empty or letterless text, so test inputs keep
/// their punctuation and casing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CleanPolicy {
    Train,
    Eval,
}

/// Deletion rule for source artifacts (dictionary markers, signatures, ...).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArtifactRule {
    Literal(String),
    Regex(String),
}

fn markup() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"<[^>]+>").expect("static pattern"))
}

/// Text cleaner with an ordered list of artifact deletion rules.
#[derive(Clone, Debug, Default)]
pub struct Cleaner {
    rules: Vec<Regex>,
}

// Upper bound on strip/collapse rounds before giving up on a fixed point.
const MAX_ROUNDS: usize = 16;

impl Cleaner {
    pub fn new(rules: &[ArtifactRule]) -> Result<Self> {
        let rules = rules
            .iter()
            .map(|rule| {
                let pattern = match rule {
                    ArtifactRule::Literal(s) => regex::escape(s),
                    ArtifactRule::Regex(s) => s.clone(),
                };
                Regex::new(&pattern).map_err(|source| CorpusError::InvalidRule {
                    pattern: pattern.clone(),
                    source,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self { rules })
    }

    /// Cleans `raw`, returning `None` when the result is empty or has no letter.
    ///
    /// Steps run in a fixed order: markup strip, artifact rules, whitespace
    /// collapse, trim, letter check. Strip and collapse repeat until nothing
    /// changes, so cleaning a cleaned string is a no-op.
    pub fn clean(&self, raw: &str, policy: CleanPolicy) -> Option<String> {
        let mut text = raw.to_owned();
        for _ in 0..MAX_ROUNDS {
            let mut next = text.clone();
            if policy == CleanPolicy::Train {
                next = markup().replace_all(&next, "").into_owned();
                for rule in &self.rules {
                    next = rule.replace_all(&next, "").into_owned();
                }
            }
            next = collapse_whitespace(&next);
            if next == text {
                break;
            }
            text = next;
        }
        if text.is_empty() || !text.chars().any(char::is_alphabetic) {
            None
        } else {
            Some(text)
        }
    }
}

/// Collapses every whitespace run to one space and trims both ends.
fn collapse_whitespace(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for token in s.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(token);
    }
    out
}

/// Cleans with no artifact rules.
pub fn clean_text(raw: &str, policy: CleanPolicy) -> Option<String> {
    Cleaner::default().clean(raw, policy)
}
