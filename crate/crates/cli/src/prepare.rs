//! `idiomid prepare`: clean, deduplicate, route, mask and split corpora.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use idiomid::corpus::{
    build_split_with_rest, dedup_intra_class, load_corpus, load_relabel_patch, route_cross_class_duplicates,
    write_jsonl, CleanPolicy, Cleaner, CorpusFormat, CorpusStats, LabeledCorpus, SplitManifest, VarietyLabel,
};
use idiomid::masking::{apply_mask, gazetteer_mask, load_gazetteer, load_spans, SpanAnnotation};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{fail, CliResult, Exit, OrExit};

#[derive(Serialize)]
struct PrepareManifest<'a> {
    config: serde_json::Value,
    counts: BTreeMap<&'a str, BTreeMap<VarietyLabel, usize>>,
    splits: &'a SplitManifest,
}

fn load(cfg: &ExperimentConfig, path: &Path, cleaner: &Cleaner, policy: CleanPolicy) -> CliResult<LabeledCorpus> {
    let path = cfg.resolve(path);
    let corpus = load_corpus(&path, CorpusFormat::from_path(&path), &cfg.labels)
        .with_context(|| format!("loading {}", path.display()))
        .or_exit(Exit::Data)?;
    let before = corpus.len();
    let cleaned = corpus.clean(cleaner, policy);
    if cleaned.len() < before {
        log::info!("{}: dropped {} samples during cleaning", path.display(), before - cleaned.len());
    }
    Ok(cleaned)
}

/// Spans for the samples of `corpus` only.
fn spans_for<'a>(corpus: &LabeledCorpus, spans: &'a [SpanAnnotation]) -> Vec<SpanAnnotation> {
    let ids: HashSet<&str> = corpus.samples().iter().map(|s| s.id.as_str()).collect();
    spans.iter().filter(|s| ids.contains(s.sample_id.as_str())).cloned().collect()
}

fn mask(cfg: &ExperimentConfig, corpus: LabeledCorpus, file_spans: &[SpanAnnotation]) -> CliResult<LabeledCorpus> {
    let mut spans = spans_for(&corpus, file_spans);
    if let Some(g) = &cfg.masking.gazetteer {
        let names = load_gazetteer(&cfg.resolve(g)).or_exit(Exit::Data)?;
        spans.extend(gazetteer_mask(&corpus, &names, &cfg.masking.policy));
    }
    apply_mask(&corpus, &spans, &cfg.masking.policy).or_exit(Exit::Data)
}

pub fn run(cfg: &ExperimentConfig, output_dir: &Path) -> CliResult<()> {
    if cfg.data.train.is_empty() {
        return fail(Exit::Usage, "config lists no training corpora under data.train");
    }
    let cleaner = Cleaner::new(&cfg.cleaning.rules).or_exit(Exit::Usage)?;
    let mut parts = Vec::new();
    for path in &cfg.data.train {
        parts.push(load(cfg, path, &cleaner, CleanPolicy::Train)?);
    }
    let mut train = LabeledCorpus::concat(parts, cfg.labels.clone()).or_exit(Exit::Data)?;
    let mut eval_names = Vec::new();
    let mut evals = Vec::new();
    for (name, path) in &cfg.data.eval {
        eval_names.push(name.as_str());
        evals.push(load(cfg, path, &cleaner, CleanPolicy::Eval)?);
    }

    if let Some(patch) = &cfg.data.relabel {
        let patch = load_relabel_patch(&cfg.resolve(patch), &cfg.labels).or_exit(Exit::Data)?;
        train = train.relabel(&patch).or_exit(Exit::Data)?;
        evals = evals.iter().map(|e| e.relabel(&patch)).collect::<Result<_, _>>().or_exit(Exit::Data)?;
    }

    train = dedup_intra_class(&train);
    let evals: Vec<LabeledCorpus> = evals.iter().map(dedup_intra_class).collect();
    let (mut train, mut evals) = route_cross_class_duplicates(&train, &evals);

    if cfg.masking.enabled {
        let file_spans = match &cfg.masking.spans {
            Some(p) => load_spans(&cfg.resolve(p)).or_exit(Exit::Data)?,
            None => Vec::new(),
        };
        train = mask(cfg, train, &file_spans)?;
        evals = evals
            .into_iter()
            .map(|e| mask(cfg, e, &file_spans))
            .collect::<CliResult<_>>()?;
    }

    let mut manifest = SplitManifest::new();
    let mut outputs: Vec<(String, LabeledCorpus)> = Vec::new();
    for spec in &cfg.splits {
        let (split, rest) = build_split_with_rest(&train, spec).or_exit(Exit::Data)?;
        manifest.record(&spec.name, &split, Some(spec));
        outputs.push((spec.name.clone(), split));
        train = rest;
    }
    if train.is_empty() {
        return fail(Exit::Data, "no training samples left after preparation");
    }
    manifest.record("train", &train, None);
    for (name, e) in eval_names.iter().zip(evals) {
        manifest.record(name, &e, None);
        outputs.push((name.to_string(), e));
    }
    outputs.insert(0, ("train".into(), train));

    fs::create_dir_all(output_dir)
        .with_context(|| format!("creating {}", output_dir.display()))
        .or_exit(Exit::Data)?;
    let mut stats = String::new();
    for (name, corpus) in &outputs {
        let path: PathBuf = output_dir.join(format!("{name}.jsonl"));
        write_jsonl(corpus, &path).or_exit(Exit::Data)?;
        stats.push_str(&format!("== {name} ({} samples)\n{}\n", corpus.len(), CorpusStats::of(corpus)));
        log::info!("wrote {} samples to {}", corpus.len(), path.display());
    }
    let record = PrepareManifest {
        config: cfg.echo(),
        counts: outputs.iter().map(|(n, c)| (n.as_str(), c.label_counts())).collect(),
        splits: &manifest,
    };
    let json = serde_json::to_string_pretty(&record).expect("manifest serializes");
    fs::write(output_dir.join("manifest.json"), json + "\n").or_exit(Exit::Data)?;
    fs::write(output_dir.join("stats.txt"), &stats).or_exit(Exit::Data)?;
    print!("{stats}");
    Ok(())
}
