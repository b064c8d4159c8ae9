use std::collections::{HashMap, HashSet};

use super::{LabeledCorpus, Sample, VarietyLabel};

/// Drops later exact-text duplicates within each label, preserving order.
///
/// The same text under two different labels is kept in both.
pub fn dedup_intra_class(corpus: &LabeledCorpus) -> LabeledCorpus {
    let mut seen: HashSet<(&VarietyLabel, &str)> = HashSet::new();
    let samples = corpus
        .samples()
        .iter()
        .filter(|s| seen.insert((&s.label, s.text.as_str())))
        .cloned()
        .collect();
    LabeledCorpus::from_parts_unchecked(samples, corpus.label_set().clone())
}

/// Moves texts shared between an evaluation corpus and any other corpus
/// into the training corpus.
///
/// A text is shared when it occurs in the training corpus, in another
/// evaluation corpus, or under more than one label in the same evaluation
/// corpus. Shared samples are removed from every evaluation corpus and
/// appended to the training corpus unless that (label, text) pair is
/// already there. Afterwards no evaluation text matches any training text.
pub fn route_cross_class_duplicates(
    train: &LabeledCorpus,
    evals: &[LabeledCorpus],
) -> (LabeledCorpus, Vec<LabeledCorpus>) {
    // text -> (set of eval corpora containing it, distinct labels seen per corpus)
    let mut owners: HashMap<&str, HashMap<usize, HashSet<&VarietyLabel>>> = HashMap::new();
    for (i, eval) in evals.iter().enumerate() {
        for s in eval.samples() {
            owners
                .entry(s.text.as_str())
                .or_default()
                .entry(i)
                .or_default()
                .insert(&s.label);
        }
    }
    let train_texts: HashSet<&str> = train.texts().collect();
    let shared: HashSet<&str> = owners
        .iter()
        .filter(|(text, per_corpus)| {
            train_texts.contains(*text)
                || per_corpus.len() > 1
                || per_corpus.values().any(|labels| labels.len() > 1)
        })
        .map(|(text, _)| *text)
        .collect();

    let mut train_samples: Vec<Sample> = train.samples().to_vec();
    let mut in_train: HashSet<(VarietyLabel, String)> = train
        .samples()
        .iter()
        .map(|s| (s.label.clone(), s.text.clone()))
        .collect();
    let mut routed_evals = Vec::with_capacity(evals.len());
    for eval in evals {
        let mut kept = Vec::with_capacity(eval.len());
        for s in eval.samples() {
            if shared.contains(s.text.as_str()) {
                if in_train.insert((s.label.clone(), s.text.clone())) {
                    train_samples.push(s.clone());
                }
            } else {
                kept.push(s.clone());
            }
        }
        routed_evals.push(LabeledCorpus::from_parts_unchecked(
            kept,
            eval.label_set().clone(),
        ));
    }
    (
        LabeledCorpus::from_parts_unchecked(train_samples, train.label_set().clone()),
        routed_evals,
    )
}
