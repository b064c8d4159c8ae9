use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ngrams::{for_each_char_ngram, for_each_word_ngram, prepare};
use super::{FeatureError, Namespace, Result, SparseVector, TokenizerConfig};
use crate::corpus::LabeledCorpus;
use crate::Scalar;

/// Term table fixed at fit time.
#[derive(Clone, Debug, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    doc_freq: Vec<u32>,
    n_docs: usize,
    char_index: HashMap<String, u32>,
    word_index: HashMap<String, u32>,
}

impl Vocabulary {
    fn from_table(terms: Vec<String>, doc_freq: Vec<u32>, n_docs: usize) -> Self {
        let mut char_index = HashMap::new();
        let mut word_index = HashMap::new();
        for (i, t) in terms.iter().enumerate() {
            match Namespace::split(t) {
                Some((Namespace::Char, g)) => char_index.insert(g.to_owned(), i as u32),
                Some((Namespace::Word, g)) => word_index.insert(g.to_owned(), i as u32),
                None => unreachable!("terms are validated as namespaced"),
            };
        }
        Self {
            terms,
            doc_freq,
            n_docs,
            char_index,
            word_index,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Namespaced term at `index`.
    pub fn term(&self, index: usize) -> &str {
        &self.terms[index]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    /// Index of a namespaced term such as `c:ei` or `w:scha`.
    pub fn index_of(&self, term: &str) -> Option<usize> {
        let (ns, gram) = Namespace::split(term)?;
        let map = match ns {
            Namespace::Char => &self.char_index,
            Namespace::Word => &self.word_index,
        };
        map.get(gram).map(|&i| i as usize)
    }

    pub fn doc_freq(&self, index: usize) -> u32 {
        self.doc_freq[index]
    }

    pub fn doc_freqs(&self) -> &[u32] {
        &self.doc_freq
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }
}

/// How term counts become feature values.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// Raw in-vocabulary term counts.
    Counts,
    /// Counts divided by their sum.
    Tf,
    /// Sublinear TF times IDF, L2-normalized.
    #[default]
    TfIdf,
}

/// A fitted vocabulary with its IDF weights. Immutable after fitting.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureSpace<F: Scalar> {
    config: TokenizerConfig,
    vocabulary: Vocabulary,
    idf: Vec<F>,
}

type DfTable = (HashMap<String, u32>, HashMap<String, u32>);

fn count_chunk(texts: &[&str], config: &TokenizerConfig) -> DfTable {
    let mut char_df: HashMap<String, u32> = HashMap::new();
    let mut word_df: HashMap<String, u32> = HashMap::new();
    let bump = |map: &mut HashMap<String, u32>, g: &str| match map.get_mut(g) {
        Some(n) => *n += 1,
        None => {
            map.insert(g.to_owned(), 1);
        }
    };
    for text in texts {
        let doc = prepare(text, config);
        let mut seen: HashSet<&str> = HashSet::new();
        for_each_char_ngram(&doc, config, |g| {
            seen.insert(g);
        });
        for g in seen.drain() {
            bump(&mut char_df, g);
        }
        for_each_word_ngram(&doc, config, |g| {
            seen.insert(g);
        });
        for g in seen.drain() {
            bump(&mut word_df, g);
        }
    }
    (char_df, word_df)
}

fn merge_tables(mut a: DfTable, b: DfTable) -> DfTable {
    for (g, n) in b.0 {
        *a.0.entry(g).or_default() += n;
    }
    for (g, n) in b.1 {
        *a.1.entry(g).or_default() += n;
    }
    a
}

/// Smoothed inverse document frequency, `ln((1 + N) / (1 + df)) + 1`.
pub(crate) fn smoothed_idf(n_docs: usize, df: u32) -> f64 {
    ((1.0 + n_docs as f64) / (1.0 + df as f64)).ln() + 1.0
}

impl<F: Scalar> FeatureSpace<F> {
    /// Fits the vocabulary and IDF weights on `texts`.
    ///
    /// Keeps every namespaced term whose document frequency reaches
    /// `min_df`; indices follow lexicographic order of namespaced terms.
    pub fn fit(texts: &[&str], config: &TokenizerConfig) -> Result<Self> {
        config.validate()?;
        if texts.is_empty() {
            return Err(FeatureError::EmptyCorpus);
        }
        let (char_df, word_df) = texts
            .par_chunks(256)
            .map(|chunk| count_chunk(chunk, config))
            .reduce(|| (HashMap::new(), HashMap::new()), merge_tables);
        let min_df = config.min_df as u32;
        let mut table: Vec<(String, u32)> = char_df
            .into_iter()
            .filter(|(_, df)| *df >= min_df)
            .map(|(g, df)| (Namespace::Char.term(&g), df))
            .chain(
                word_df
                    .into_iter()
                    .filter(|(_, df)| *df >= min_df)
                    .map(|(g, df)| (Namespace::Word.term(&g), df)),
            )
            .collect();
        if table.is_empty() {
            return Err(FeatureError::EmptyVocabulary);
        }
        table.par_sort_unstable_by(|a, b| a.0.cmp(&b.0));
        let n_docs = texts.len();
        let idf = table
            .iter()
            .map(|(_, df)| F::of(smoothed_idf(n_docs, *df)))
            .collect();
        let (terms, doc_freq) = table.into_iter().unzip();
        Ok(Self {
            config: config.clone(),
            vocabulary: Vocabulary::from_table(terms, doc_freq, n_docs),
            idf,
        })
    }

    pub fn config(&self) -> &TokenizerConfig {
        &self.config
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn idf(&self) -> &[F] {
        &self.idf
    }

    pub fn dim(&self) -> usize {
        self.vocabulary.len()
    }

    /// Raw counts of in-vocabulary terms in `text`, sorted by index.
    pub fn term_counts(&self, text: &str) -> Vec<(u32, u32)> {
        let doc = prepare(text, &self.config);
        let mut counts: HashMap<u32, u32> = HashMap::new();
        for_each_char_ngram(&doc, &self.config, |g| {
            if let Some(&i) = self.vocabulary.char_index.get(g) {
                *counts.entry(i).or_default() += 1;
            }
        });
        for_each_word_ngram(&doc, &self.config, |g| {
            if let Some(&i) = self.vocabulary.word_index.get(g) {
                *counts.entry(i).or_default() += 1;
            }
        });
        let mut counts: Vec<(u32, u32)> = counts.into_iter().collect();
        counts.sort_unstable();
        counts
    }

    /// Encodes `text` with the given weighting. Out-of-vocabulary terms are ignored.
    pub fn vectorize(&self, text: &str, weighting: Weighting) -> SparseVector<F> {
        let counts = self.term_counts(text);
        let pairs: Vec<(u32, F)> = match weighting {
            Weighting::Counts => counts.iter().map(|&(i, c)| (i, F::of(c as f64))).collect(),
            Weighting::Tf => {
                let total: u32 = counts.iter().map(|c| c.1).sum();
                counts
                    .iter()
                    .map(|&(i, c)| (i, F::of(c as f64 / total as f64)))
                    .collect()
            }
            Weighting::TfIdf => {
                let raw: Vec<(u32, F)> = counts
                    .iter()
                    .map(|&(i, c)| (i, (F::one() + F::of(c as f64).ln()) * self.idf[i as usize]))
                    .collect();
                let norm = raw.iter().map(|&(_, v)| v * v).sum::<F>().sqrt();
                raw.into_iter().map(|(i, v)| (i, v / norm)).collect()
            }
        };
        SparseVector::from_pairs(pairs)
    }

    /// TF-IDF encoding of `text`.
    pub fn transform(&self, text: &str) -> SparseVector<F> {
        self.vectorize(text, Weighting::TfIdf)
    }

    /// Encodes many texts in parallel, preserving order.
    pub fn transform_all(&self, texts: &[&str], weighting: Weighting) -> Vec<SparseVector<F>> {
        texts.par_iter().map(|t| self.vectorize(t, weighting)).collect()
    }

    /// Canonical JSON encoding. Equal spaces produce identical bytes.
    pub fn to_json(&self) -> String {
        let file = SpaceFile {
            format: FORMAT_NAME.to_owned(),
            format_version: FORMAT_VERSION,
            scalar: F::NAME.to_owned(),
            config: self.config.clone(),
            n_docs: self.vocabulary.n_docs,
            terms: self
                .vocabulary
                .terms
                .iter()
                .zip(&self.vocabulary.doc_freq)
                .enumerate()
                .map(|(i, (t, df))| (t.clone(), i as u32, *df))
                .collect(),
            idf: self.idf.clone(),
        };
        serde_json::to_string(&file).expect("feature space serializes")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let header: SpaceHeader =
            serde_json::from_str(json).map_err(|e| FeatureError::Corrupt(e.to_string()))?;
        if header.format != FORMAT_NAME {
            return Err(FeatureError::Corrupt(format!("unexpected format {:?}", header.format)));
        }
        if header.format_version != FORMAT_VERSION {
            return Err(FeatureError::VersionMismatch {
                found: header.format_version,
                expected: FORMAT_VERSION,
            });
        }
        if header.scalar != F::NAME {
            return Err(FeatureError::ScalarMismatch {
                found: header.scalar,
                expected: F::NAME.to_owned(),
            });
        }
        let file: SpaceFile<F> =
            serde_json::from_str(json).map_err(|e| FeatureError::Corrupt(e.to_string()))?;
        file.config.validate()?;
        let corrupt = |msg: &str| FeatureError::Corrupt(msg.to_owned());
        if file.idf.len() != file.terms.len() {
            return Err(corrupt("idf length differs from term count"));
        }
        let mut terms = Vec::with_capacity(file.terms.len());
        let mut doc_freq = Vec::with_capacity(file.terms.len());
        for (pos, (term, index, df)) in file.terms.into_iter().enumerate() {
            if index as usize != pos {
                return Err(corrupt("term indices are not dense and ordered"));
            }
            if Namespace::split(&term).is_none() {
                return Err(corrupt("term without namespace prefix"));
            }
            if df == 0 || df as usize > file.n_docs {
                return Err(corrupt("document frequency out of range"));
            }
            terms.push(term);
            doc_freq.push(df);
        }
        Ok(Self {
            config: file.config,
            vocabulary: Vocabulary::from_table(terms, doc_freq, file.n_docs),
            idf: file.idf,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|source| FeatureError::Io {
            path: path.to_owned(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let json = fs::read_to_string(path).map_err(|source| FeatureError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&json)
    }

    /// SHA-256 of the canonical JSON encoding, hex-encoded.
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }
}

const FORMAT_NAME: &str = "idiomid-feature-space";
const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(bound = "")]
struct SpaceFile<F: Scalar> {
    format: String,
    format_version: u32,
    scalar: String,
    config: TokenizerConfig,
    n_docs: usize,
    terms: Vec<(String, u32, u32)>,
    idf: Vec<F>,
}

#[derive(Deserialize)]
struct SpaceHeader {
    format: String,
    format_version: u32,
    scalar: String,
}

/// Fits a feature space on the texts of `corpus`.
pub fn fit_vocabulary<F: Scalar>(
    corpus: &LabeledCorpus,
    config: &TokenizerConfig,
) -> Result<FeatureSpace<F>> {
    let texts: Vec<&str> = corpus.texts().collect();
    FeatureSpace::fit(&texts, config)
}

/// TF-IDF encoding of one text.
pub fn transform<F: Scalar>(text: &str, space: &FeatureSpace<F>) -> SparseVector<F> {
    space.transform(text)
}

/// TF-IDF encoding of every sample, in corpus order.
pub fn transform_corpus<F: Scalar>(
    corpus: &LabeledCorpus,
    space: &FeatureSpace<F>,
) -> Vec<SparseVector<F>> {
    let texts: Vec<&str> = corpus.texts().collect();
    space.transform_all(&texts, Weighting::TfIdf)
}
