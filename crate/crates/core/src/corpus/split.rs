use std::collections::BTreeMap;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::{CorpusError, LabeledCorpus, Result, VarietyLabel};
use crate::rng::{seeded, DEFAULT_SEED};

fn default_seed() -> u64 {
    DEFAULT_SEED
}

/// Target per-label sample counts for one split.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub name: String,
    pub per_label_counts: BTreeMap<VarietyLabel, usize>,
    #[serde(default)]
    pub balanced: bool,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl SplitSpec {
    pub fn balanced<'a>(
        name: impl Into<String>,
        labels: impl IntoIterator<Item = &'a VarietyLabel>,
        per_label: usize,
        seed: u64,
    ) -> Self {
        Self {
            name: name.into(),
            per_label_counts: labels.into_iter().map(|l| (l.clone(), per_label)).collect(),
            balanced: true,
            seed,
        }
    }

    pub fn total(&self) -> usize {
        self.per_label_counts.values().sum()
    }

    fn validate(&self, corpus: &LabeledCorpus) -> Result<()> {
        let invalid = |reason: String| CorpusError::InvalidSplitSpec {
            name: self.name.clone(),
            reason,
        };
        if let Some(l) = self
            .per_label_counts
            .keys()
            .find(|l| !corpus.label_set().contains(l.as_str()))
        {
            return Err(invalid(format!("label {l} is not in the corpus label set")));
        }
        if self.balanced {
            let mut nonzero = self.per_label_counts.values().filter(|&&c| c > 0);
            if let Some(first) = nonzero.next() {
                if nonzero.any(|c| c != first) {
                    return Err(invalid("balanced split with unequal counts".into()));
                }
            }
        }
        Ok(())
    }
}

/// Samples exactly `spec.per_label_counts[l]` texts of each label.
///
/// Selection is uniform without replacement from a generator seeded with
/// `spec.seed`; the output keeps corpus order.
pub fn build_split(corpus: &LabeledCorpus, spec: &SplitSpec) -> Result<LabeledCorpus> {
    build_split_with_rest(corpus, spec).map(|(split, _)| split)
}

/// Like [`build_split`], also returning the samples not selected.
pub fn build_split_with_rest(
    corpus: &LabeledCorpus,
    spec: &SplitSpec,
) -> Result<(LabeledCorpus, LabeledCorpus)> {
    spec.validate(corpus)?;
    let by_label = indices_by_label(corpus);
    let mut rng = seeded(spec.seed);
    let mut chosen = vec![false; corpus.len()];
    for label in corpus.label_set().labels() {
        let need = spec.per_label_counts.get(label).copied().unwrap_or(0);
        if need == 0 {
            continue;
        }
        let pool = by_label.get(label).map(Vec::as_slice).unwrap_or(&[]);
        if pool.len() < need {
            return Err(CorpusError::InsufficientSamples {
                label: label.clone(),
                have: pool.len(),
                need,
            });
        }
        for i in index::sample(&mut rng, pool.len(), need) {
            chosen[pool[i]] = true;
        }
    }
    Ok(partition(corpus, &chosen))
}

fn indices_by_label(corpus: &LabeledCorpus) -> BTreeMap<&VarietyLabel, Vec<usize>> {
    let mut by_label: BTreeMap<&VarietyLabel, Vec<usize>> = BTreeMap::new();
    for (i, s) in corpus.samples().iter().enumerate() {
        by_label.entry(&s.label).or_default().push(i);
    }
    by_label
}

fn partition(corpus: &LabeledCorpus, chosen: &[bool]) -> (LabeledCorpus, LabeledCorpus) {
    let (picked, rest): (Vec<usize>, Vec<usize>) = (0..corpus.len()).partition(|&i| chosen[i]);
    (corpus.select(&picked), corpus.select(&rest))
}

/// Per-label sample counts for a stratified subsample of `fraction`.
///
/// Each label gets `round_half_even(fraction * count)`; then single-unit
/// corrections, ordered by rounding residual, bring the total to
/// `round_half_even(fraction * N)`. No label moves by more than one and
/// none is pushed to zero.
pub fn stratified_targets(
    counts: &[(VarietyLabel, usize)],
    fraction: f64,
) -> Result<Vec<(VarietyLabel, usize)>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(CorpusError::InvalidFraction(fraction));
    }
    let total: usize = counts.iter().map(|(_, c)| c).sum();
    let global = (fraction * total as f64).round_ties_even() as i64;
    let mut targets: Vec<i64> = counts
        .iter()
        .map(|(_, c)| (fraction * *c as f64).round_ties_even() as i64)
        .collect();
    let residual = |i: usize, t: i64| fraction * counts[i].1 as f64 - t as f64;
    let mut diff = global - targets.iter().sum::<i64>();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    if diff > 0 {
        order.sort_by(|&a, &b| residual(b, targets[b]).total_cmp(&residual(a, targets[a])).then(a.cmp(&b)));
        for &i in &order {
            if diff == 0 {
                break;
            }
            if targets[i] < counts[i].1 as i64 {
                targets[i] += 1;
                diff -= 1;
            }
        }
    } else if diff < 0 {
        order.sort_by(|&a, &b| residual(a, targets[a]).total_cmp(&residual(b, targets[b])).then(a.cmp(&b)));
        for &i in &order {
            if diff == 0 {
                break;
            }
            if targets[i] > 1 {
                targets[i] -= 1;
                diff += 1;
            }
        }
    }
    counts
        .iter()
        .zip(targets)
        .map(|((label, _), t)| {
            if t <= 0 {
                Err(CorpusError::EmptyClassAfterSubsample(label.clone()))
            } else {
                Ok((label.clone(), t as usize))
            }
        })
        .collect()
}

/// Draws a seeded stratified subsample keeping `fraction` of each label.
pub fn stratified_subsample(
    corpus: &LabeledCorpus,
    fraction: f64,
    seed: u64,
) -> Result<LabeledCorpus> {
    let by_label = indices_by_label(corpus);
    let counts: Vec<(VarietyLabel, usize)> = corpus
        .label_set()
        .labels()
        .iter()
        .filter_map(|l| by_label.get(l).map(|v| (l.clone(), v.len())))
        .collect();
    let targets = stratified_targets(&counts, fraction)?;
    let mut rng = seeded(seed);
    let mut chosen = vec![false; corpus.len()];
    for (label, take) in targets {
        let pool = &by_label[&label];
        for i in index::sample(&mut rng, pool.len(), take) {
            chosen[pool[i]] = true;
        }
    }
    Ok(partition(corpus, &chosen).0)
}

/// Audit record of which samples went into which split.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub version: u32,
    pub splits: BTreeMap<String, SplitManifestEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitManifestEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec: Option<SplitSpec>,
    pub counts: BTreeMap<VarietyLabel, usize>,
    pub ids: Vec<String>,
}

impl SplitManifest {
    pub const VERSION: u32 = 1;

    pub fn new() -> Self {
        Self {
            version: Self::VERSION,
            splits: BTreeMap::new(),
        }
    }

    pub fn record(&mut self, name: &str, corpus: &LabeledCorpus, spec: Option<&SplitSpec>) {
        self.splits.insert(
            name.to_owned(),
            SplitManifestEntry {
                spec: spec.cloned(),
                counts: corpus.label_counts(),
                ids: corpus.samples().iter().map(|s| s.id.clone()).collect(),
            },
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{LabelSet, Sample};
    use proptest::prelude::*;

    fn pool(per_label: &[(&str, usize)]) -> LabeledCorpus {
        let mut samples = Vec::new();
        for (label, n) in per_label {
            for i in 0..*n {
                samples.push(Sample::new(format!("{label}-{i}"), format!("{label} {i}"), (*label).into(), ""));
            }
        }
        LabeledCorpus::new(samples, LabelSet::romansh()).unwrap()
    }

    fn ids(c: &LabeledCorpus) -> Vec<String> {
        c.samples().iter().map(|s| s.id.clone()).collect()
    }

    #[test]
    fn balanced_six_by_thousand() {
        let labels = LabelSet::romansh();
        let corpus = pool(&labels.labels().iter().map(|l| (l.as_str(), 1500)).collect::<Vec<_>>());
        let spec = SplitSpec::balanced("test-b", labels.labels(), 1000, 42);
        let split = build_split(&corpus, &spec).unwrap();
        assert_eq!(split.len(), 6000);
        assert!(split.label_counts().values().all(|&c| c == 1000));
        assert_eq!(ids(&build_split(&corpus, &spec).unwrap()), ids(&split));
        let other = build_split(&corpus, &SplitSpec { seed: 7, ..spec }).unwrap();
        assert_ne!(ids(&other), ids(&split));
    }

    #[test]
    fn zero_count_label_is_absent() {
        let corpus = pool(&[("Puter", 10), ("RG", 10)]);
        let spec = SplitSpec {
            name: "test-c".into(),
            per_label_counts: [("Puter".into(), 5), ("RG".into(), 0)].into_iter().collect(),
            balanced: true,
            seed: 1,
        };
        let split = build_split(&corpus, &spec).unwrap();
        assert_eq!(split.len(), 5);
        assert!(split.samples().iter().all(|s| s.label.as_str() == "Puter"));
    }

    #[test]
    fn insufficient_samples() {
        let corpus = pool(&[("Puter", 3)]);
        let spec = SplitSpec {
            name: "x".into(),
            per_label_counts: [("Puter".into(), 4)].into_iter().collect(),
            balanced: false,
            seed: 1,
        };
        assert!(matches!(
            build_split(&corpus, &spec),
            Err(CorpusError::InsufficientSamples { have: 3, need: 4, .. })
        ));
    }

    #[test]
    fn unequal_balanced_spec_is_invalid() {
        let corpus = pool(&[("Puter", 3), ("RG", 3)]);
        let spec = SplitSpec {
            name: "x".into(),
            per_label_counts: [("Puter".into(), 1), ("RG".into(), 2)].into_iter().collect(),
            balanced: true,
            seed: 1,
        };
        assert!(matches!(build_split(&corpus, &spec), Err(CorpusError::InvalidSplitSpec { .. })));
    }

    #[test]
    fn split_and_rest_partition_the_corpus() {
        let corpus = pool(&[("Puter", 20), ("RG", 7)]);
        let spec = SplitSpec {
            name: "x".into(),
            per_label_counts: [("Puter".into(), 5), ("RG".into(), 2)].into_iter().collect(),
            balanced: false,
            seed: 9,
        };
        let (split, rest) = build_split_with_rest(&corpus, &spec).unwrap();
        assert_eq!(split.len() + rest.len(), corpus.len());
        let mut all = ids(&split);
        all.extend(ids(&rest));
        all.sort();
        let mut expected = ids(&corpus);
        expected.sort();
        assert_eq!(all, expected);
    }

    #[test]
    fn subsample_counts() {
        let c = pool(&[("Puter", 100), ("RG", 50)]);
        let s = stratified_subsample(&c, 0.2, 42).unwrap();
        assert_eq!(s.label_counts()[&VarietyLabel::from("Puter")], 20);
        assert_eq!(s.label_counts()[&VarietyLabel::from("RG")], 10);

        let c = pool(&[("Puter", 3)]);
        let s = stratified_subsample(&c, 0.2, 42).unwrap();
        assert_eq!(s.len(), 1);

        let c = pool(&[("Puter", 13), ("RG", 4)]);
        let s = stratified_subsample(&c, 1.0, 3).unwrap();
        assert_eq!(s, c);
    }

    #[test]
    fn subsample_errors() {
        let c = pool(&[("Puter", 100), ("RG", 1)]);
        assert!(matches!(
            stratified_subsample(&c, 0.2, 1),
            Err(CorpusError::EmptyClassAfterSubsample(_))
        ));
        assert!(matches!(stratified_subsample(&c, 0.0, 1), Err(CorpusError::InvalidFraction(_))));
        assert!(matches!(stratified_subsample(&c, 1.5, 1), Err(CorpusError::InvalidFraction(_))));
    }

    #[test]
    fn targets_follow_half_even_then_repair() {
        // 0.5 * 5 = 2.5 -> 2 each, global 0.5 * 10 = 5 -> one label repaired up
        let counts = vec![("A".into(), 5), ("B".into(), 5)];
        let t = stratified_targets(&counts, 0.5).unwrap();
        assert_eq!(t.iter().map(|x| x.1).sum::<usize>(), 5);
        assert_eq!(t[0].1, 3);
        assert_eq!(t[1].1, 2);
    }

    proptest! {
        #[test]
        fn subsample_keeps_every_class(
            sizes in prop::collection::vec(5usize..60, 1..6),
            fraction in 0.2f64..=1.0,
            seed in any::<u64>(),
        ) {
            let labels = LabelSet::romansh();
            let spec: Vec<(&str, usize)> =
                labels.labels().iter().map(|l| l.as_str()).zip(sizes.iter().copied()).collect();
            let c = pool(&spec);
            let s = stratified_subsample(&c, fraction, seed).unwrap();
            for (label, n) in &spec {
                let got = s.label_counts()[&VarietyLabel::from(*label)] as f64;
                prop_assert!(got >= 1.0);
                prop_assert!((got - fraction * *n as f64).abs() <= 1.5);
            }
            let global = (fraction * c.len() as f64).round_ties_even() as usize;
            prop_assert_eq!(s.len(), global);
            prop_assert_eq!(stratified_subsample(&c, fraction, seed).unwrap(), s);
        }

        #[test]
        fn balanced_split_is_balanced(per in 1usize..20, seed in any::<u64>()) {
            let c = pool(&[("Puter", 25), ("RG", 30), ("Vallader", 21)]);
            let labels = ["Puter", "RG", "Vallader"].map(VarietyLabel::from);
            let spec = SplitSpec::balanced("b", labels.iter(), per, seed);
            let s = build_split(&c, &spec).unwrap();
            prop_assert!(s.label_counts().values().filter(|&&n| n > 0).all(|&n| n == per));
            prop_assert_eq!(build_split(&c, &spec).unwrap(), s);
        }
    }
}
