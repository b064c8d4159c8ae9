//! Word and character n-gram TF-IDF features.
//!
//! Terms are namespaced (`c:` for character n-grams, `w:` for word n-grams)
//! so the same string can be both a character and a word feature. Weights
//! use sublinear term frequency `1 + ln(tf)` times smoothed IDF
//! `ln((1 + N) / (1 + df)) + 1`, and every vector is L2-normalized.

mod ngrams;
mod sparse;
mod space;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ngrams::{char_ngrams, word_ngrams};
pub use space::{fit_vocabulary, transform, transform_corpus, FeatureSpace, Vocabulary, Weighting};
pub use sparse::SparseVector;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("no term reaches the minimum document frequency")]
    EmptyVocabulary,
    #[error("cannot fit a vocabulary on an empty corpus")]
    EmptyCorpus,
    #[error("invalid tokenizer config: {0}")]
    InvalidConfig(String),
    #[error("feature space format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("feature space was written with {found} scalars, expected {expected}")]
    ScalarMismatch { found: String, expected: String },
    #[error("corrupt feature space file: {0}")]
    Corrupt(String),
    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = FeatureError> = std::result::Result<T, E>;

fn yes() -> bool {
    true
}

/// N-gram extraction settings.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default)]
pub struct TokenizerConfig {
    pub char_ngram_min: usize,
    pub char_ngram_max: usize,
    pub word_ngram_min: usize,
    pub word_ngram_max: usize,
    /// Extract character n-grams per whitespace token instead of across the text.
    pub char_within_word_only: bool,
    /// Raise the character range floor to 2.
    pub drop_char_unigrams: bool,
    pub min_df: usize,
    /// NFC-normalize text before extraction. Off by default so that
    /// precomposed and combining diacritics stay distinct.
    pub unicode_nfc: bool,
    #[serde(default = "yes")]
    pub use_char_ngrams: bool,
    #[serde(default = "yes")]
    pub use_word_ngrams: bool,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        Self {
            char_ngram_min: 1,
            char_ngram_max: 4,
            word_ngram_min: 1,
            word_ngram_max: 1,
            char_within_word_only: false,
            drop_char_unigrams: false,
            min_df: 1,
            unicode_nfc: false,
            use_char_ngrams: true,
            use_word_ngrams: true,
        }
    }
}

impl TokenizerConfig {
    /// Word n-grams only.
    pub fn words(min: usize, max: usize) -> Self {
        Self {
            word_ngram_min: min,
            word_ngram_max: max,
            use_char_ngrams: false,
            ..Self::default()
        }
    }

    /// Character n-grams only.
    pub fn chars(min: usize, max: usize) -> Self {
        Self {
            char_ngram_min: min,
            char_ngram_max: max,
            use_word_ngrams: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(FeatureError::InvalidConfig(msg.to_owned()));
        if self.char_ngram_min < 1 || self.char_ngram_min > self.char_ngram_max {
            return bad("character range must satisfy 1 <= min <= max");
        }
        if self.word_ngram_min < 1 || self.word_ngram_min > self.word_ngram_max {
            return bad("word range must satisfy 1 <= min <= max");
        }
        if self.min_df < 1 {
            return bad("min_df must be positive");
        }
        if !self.use_char_ngrams && !self.use_word_ngrams {
            return bad("at least one of character or word n-grams must be enabled");
        }
        Ok(())
    }

    /// Character range after applying `drop_char_unigrams`.
    pub fn effective_char_range(&self) -> (usize, usize) {
        let lo = if self.drop_char_unigrams {
            self.char_ngram_min.max(2)
        } else {
            self.char_ngram_min
        };
        (lo, self.char_ngram_max)
    }
}

/// Feature family a term belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Namespace {
    Char,
    Word,
}

impl Namespace {
    pub const fn prefix(self) -> &'static str {
        match self {
            Namespace::Char => "c:",
            Namespace::Word => "w:",
        }
    }

    pub fn term(self, gram: &str) -> String {
        let mut s = String::with_capacity(gram.len() + 2);
        s.push_str(self.prefix());
        s.push_str(gram);
        s
    }

    /// Splits a namespaced term into its family and raw n-gram.
    pub fn split(term: &str) -> Option<(Namespace, &str)> {
        if let Some(g) = term.strip_prefix(Namespace::Char.prefix()) {
            Some((Namespace::Char, g))
        } else {
            term.strip_prefix(Namespace::Word.prefix()).map(|g| (Namespace::Word, g))
        }
    }
}

impl fmt::Display for Namespace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Namespace::Char => "char",
            Namespace::Word => "word",
        })
    }
}
