use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::LabeledCorpus;

/// Sample and whitespace-token totals for one (source, label) cell.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    pub samples: usize,
    pub tokens: usize,
}

impl StatsRow {
    pub fn avg_tokens(&self) -> f64 {
        if self.samples == 0 {
            0.0
        } else {
            self.tokens as f64 / self.samples as f64
        }
    }
}

/// Per-source, per-label counts in the layout of a data statement table.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub by_source: BTreeMap<String, BTreeMap<String, StatsRow>>,
    pub total: StatsRow,
}

impl CorpusStats {
    pub fn of(corpus: &LabeledCorpus) -> Self {
        let mut stats = CorpusStats::default();
        for s in corpus.samples() {
            let source = if s.source.is_empty() { "-" } else { &s.source };
            let per_label = stats.by_source.entry(source.to_owned()).or_insert_with(|| {
                corpus
                    .label_set()
                    .labels()
                    .iter()
                    .map(|l| (l.to_string(), StatsRow::default()))
                    .collect()
            });
            let row = per_label.entry(s.label.to_string()).or_default();
            row.samples += 1;
            row.tokens += s.token_count();
            stats.total.samples += 1;
            stats.total.tokens += s.token_count();
        }
        stats
    }
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<12} {:<12} {:>10} {:>12} {:>10}", "source", "label", "samples", "tokens", "avg")?;
        for (source, rows) in &self.by_source {
            let mut sub = StatsRow::default();
            for (label, row) in rows {
                writeln!(
                    f,
                    "{:<12} {:<12} {:>10} {:>12} {:>10.2}",
                    source, label, row.samples, row.tokens, row.avg_tokens()
                )?;
                sub.samples += row.samples;
                sub.tokens += row.tokens;
            }
            writeln!(
                f,
                "{:<12} {:<12} {:>10} {:>12} {:>10.2}",
                source, "total", sub.samples, sub.tokens, sub.avg_tokens()
            )?;
        }
        write!(
            f,
            "{:<12} {:<12} {:>10} {:>12} {:>10.2}",
            "all", "total", self.total.samples, self.total.tokens, self.total.avg_tokens()
        )
    }
}
