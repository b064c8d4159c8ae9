//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p idiomid-cli --test acceptance`. The textbook
//! corpus criteria read a JSONL export (`text`, `label` per line) from the
//! path in `IDIOMID_MEDIOMATIX`.

mod common;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::Mutex;
use std::time::Instant;

use common::*;
use idiomid::corpus::{
    build_split, build_split_with_rest, dedup_intra_class, load_corpus, CleanPolicy, Cleaner, CorpusFormat,
    LabelSet, LabeledCorpus, Sample, SplitSpec, VarietyLabel,
};
use idiomid::eval::{metrics, percent};
use idiomid::features::{char_ngrams, word_ngrams, FeatureSpace, Namespace, TokenizerConfig, Weighting};
use idiomid::masking::{apply_mask, MaskingPolicy, SpanAnnotation};
use idiomid::models::loss::{
    binary_example_gradient, binary_example_loss, softmax_example_gradient, softmax_example_loss,
};
use idiomid::models::{train_nb, Classifier, Loss, NbVariant, TrainConfig};
use idiomid::pipeline::{ModelSpec, PipelineConfig};
use idiomid::tuning::{FoldContext, RandomSearch, SearchOptions, SearchSpace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

// tolerances and thresholds
const METRIC_TOL: f64 = 1e-12;
const METRIC_BUDGET_SECS: f64 = 5.0;
const TFIDF_TOL: f64 = 1e-9;
const FD_STEP: f64 = 1e-6;
const FD_REL_TOL: f64 = 1e-5;
const HINGE_KINK_GAP: f64 = 1e-3;
const TABLE_TOL: f64 = 0.1;
const E2E_MIN_ACCURACY: f64 = 0.90;
const E2E_MIN_MACRO_F1: f64 = 0.88;
const E2E_BUDGET_SECS: f64 = 300.0;
const ABLATION_MAX_GAIN: f64 = 0.01;
const MEDIOMATIX_ENV: &str = "IDIOMID_MEDIOMATIX";

struct Outcome {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 11] = [
        (1, "metric oracle equivalence", metric_oracle),
        (2, "majority baseline reproduction", majority_baseline_row),
        (3, "tf-idf oracle", tfidf_oracle),
        (4, "gradient checks", gradient_checks),
        (5, "naive Bayes closed form", nb_closed_form),
        (6, "no leakage across folds", no_leakage),
        (7, "determinism of train and tune", determinism),
        (8, "textbook corpus end-to-end", textbook_end_to_end),
        (9, "ablation direction", ablation_direction),
        (10, "masking preserves samples", masking_preservation),
        (11, "salted character ranks in top features", salted_feature),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (n, name, check) in criteria {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            verdict(false, format!("panicked: {msg}"))
        });
        if !outcome.pass {
            failed += 1;
        }
        println!(
            "{} criterion {n:>2} ({name}): {} [{:.2}s]",
            if outcome.pass { "PASS" } else { "FAIL" },
            outcome.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("{} of 11 criteria passed", 11 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn names(k: usize) -> Vec<VarietyLabel> {
    (0..k).map(|i| VarietyLabel::new(format!("L{i}"))).collect()
}

/// Accuracy, macro F1, weighted F1 and macro recall straight from the definitions.
fn metric_definitions(t: &[usize], p: &[usize], k: usize) -> [f64; 4] {
    let n = t.len() as f64;
    let (mut f1s, mut recalls, mut weighted) = (Vec::new(), Vec::new(), 0.0);
    for c in 0..k {
        let mut tp = 0.0;
        let mut fp = 0.0;
        let mut fn_ = 0.0;
        for (&a, &b) in t.iter().zip(p) {
            match (a == c, b == c) {
                (true, true) => tp += 1.0,
                (false, true) => fp += 1.0,
                (true, false) => fn_ += 1.0,
                _ => {}
            }
        }
        let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
        let recall = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
        let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        weighted += (tp + fn_) / n * f1;
        if tp + fn_ > 0.0 {
            f1s.push(f1);
            recalls.push(recall);
        }
    }
    let accuracy = t.iter().zip(p).filter(|(a, b)| a == b).count() as f64 / n;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    [accuracy, mean(&f1s), weighted, mean(&recalls)]
}

fn metric_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let k = rng.random_range(2..=6);
        let n = rng.random_range(1..=200);
        let t: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let p: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let labels = names(k);
        let yt: Vec<_> = t.iter().map(|&i| labels[i].clone()).collect();
        let yp: Vec<_> = p.iter().map(|&i| labels[i].clone()).collect();
        let m = metrics(&yt, &yp, &labels).unwrap();
        let got = [m.accuracy, m.macro_f1, m.weighted_f1, m.macro_recall];
        for (a, b) in got.iter().zip(metric_definitions(&t, &p, k)) {
            worst = worst.max((a - b).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst <= METRIC_TOL && secs < METRIC_BUDGET_SECS,
        format!("max abs error {worst:.1e} over 1000 pairs in {secs:.2}s"),
    )
}

fn majority_baseline_row() -> Outcome {
    // 1000 samples, RG at 35.1%, the five idioms sharing the rest
    let labels = LabelSet::romansh();
    let sizes: BTreeMap<&str, usize> =
        [("RG", 351), ("Sursilvan", 130), ("Sutsilvan", 130), ("Surmiran", 130), ("Puter", 130), ("Vallader", 129)]
            .into_iter()
            .collect();
    let make = |prefix: &str| -> LabeledCorpus {
        let mut samples = Vec::new();
        for (label, &n) in &sizes {
            for i in 0..n {
                let text = format!("text {prefix} {label} {i}");
                samples.push(Sample::new(format!("{prefix}{label}{i}"), text, VarietyLabel::new(*label), ""));
            }
        }
        LabeledCorpus::new(samples, labels.clone()).unwrap()
    };
    let (train, test) = (make("train"), make("test"));
    let cfg = PipelineConfig { model: ModelSpec::Majority, ..Default::default() };
    let train_texts: Vec<&str> = train.texts().collect();
    let fitted = cfg.fit::<f64>(&train_texts, &train.labels()).unwrap();
    let test_texts: Vec<&str> = test.texts().collect();
    let predicted = fitted.predict(&test_texts).unwrap();
    let m = metrics(&test.labels(), &predicted, labels.labels()).unwrap();

    let reported = [("accuracy", m.accuracy, 35.1), ("macro F1", m.macro_f1, 8.7), ("weighted F1", m.weighted_f1, 18.3), ("macro recall", m.macro_recall, 16.7)];
    let mut pass = percent(m.accuracy) == "35.1" && percent(m.macro_recall) == "16.7" && percent(m.macro_f1) == "8.7";
    let weighted: f64 = percent(m.weighted_f1).parse().unwrap();
    pass &= (18.2..=18.3).contains(&weighted);
    let mut detail = Vec::new();
    for (name, value, table) in reported {
        let shown: f64 = percent(value).parse().unwrap();
        pass &= (shown - table).abs() <= TABLE_TOL + 1e-9;
        detail.push(format!("{name} {shown} (table {table})"));
    }
    verdict(pass, detail.join(", "))
}

/// TF-IDF vectors straight from the definitions, as `term -> value` per document.
fn tfidf_definitions(docs: &[String], min_df: u32) -> (Vec<String>, Vec<BTreeMap<String, f64>>) {
    let grams = |doc: &str| -> Vec<String> {
        let chars: Vec<char> = doc.chars().collect();
        let mut out = Vec::new();
        for n in 1..=3 {
            for w in chars.windows(n) {
                out.push(format!("c:{}", w.iter().collect::<String>()));
            }
        }
        let words: Vec<&str> = doc.split(' ').collect();
        for n in 1..=2 {
            for w in words.windows(n) {
                out.push(format!("w:{}", w.join(" ")));
            }
        }
        out
    };
    let per_doc: Vec<Vec<String>> = docs.iter().map(|d| grams(d)).collect();
    let mut df: BTreeMap<String, u32> = BTreeMap::new();
    for g in &per_doc {
        for term in g.iter().collect::<BTreeSet<_>>() {
            *df.entry(term.clone()).or_default() += 1;
        }
    }
    let vocab: Vec<String> = df.iter().filter(|(_, &d)| d >= min_df).map(|(t, _)| t.clone()).collect();
    let n = docs.len() as f64;
    let vectors = per_doc
        .iter()
        .map(|g| {
            let mut tf: BTreeMap<&String, f64> = BTreeMap::new();
            for term in g {
                *tf.entry(term).or_default() += 1.0;
            }
            let mut v: BTreeMap<String, f64> = tf
                .into_iter()
                .filter(|(t, _)| df[*t] >= min_df)
                .map(|(t, c)| {
                    let idf = ((1.0 + n) / (1.0 + df[t] as f64)).ln() + 1.0;
                    (t.clone(), (1.0 + c.ln()) * idf)
                })
                .collect();
            let norm = v.values().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                v.values_mut().for_each(|x| *x /= norm);
            }
            v
        })
        .collect();
    (vocab, vectors)
}

fn tfidf_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let alphabet: Vec<char> = "abcäẹ".chars().collect();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let mut empty = 0;
    for _ in 0..200 {
        let n_docs = rng.random_range(1..=6);
        let docs: Vec<String> = (0..n_docs)
            .map(|_| {
                (0..rng.random_range(1..=4))
                    .map(|_| (0..rng.random_range(1..=4)).map(|_| alphabet[rng.random_range(0..alphabet.len())]).collect::<String>())
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect();
        let min_df = rng.random_range(1..=2);
        let cfg = TokenizerConfig {
            char_ngram_min: 1,
            char_ngram_max: 3,
            word_ngram_min: 1,
            word_ngram_max: 2,
            min_df: min_df as usize,
            ..Default::default()
        };
        let (vocab, expected) = tfidf_definitions(&docs, min_df);
        let refs: Vec<&str> = docs.iter().map(String::as_str).collect();
        let space = match FeatureSpace::<f64>::fit(&refs, &cfg) {
            Ok(s) => s,
            Err(_) if vocab.is_empty() => {
                empty += 1;
                continue;
            }
            Err(e) => return verdict(false, format!("fit failed: {e}")),
        };
        if space.vocabulary().terms() != vocab.as_slice() {
            return verdict(false, format!("vocabulary differs for {docs:?}"));
        }
        for (doc, want) in refs.iter().zip(&expected) {
            let got = space.vectorize(doc, Weighting::TfIdf).to_dense(space.dim());
            for (i, term) in vocab.iter().enumerate() {
                let w = want.get(term).copied().unwrap_or(0.0);
                worst = worst.max((got[i] - w).abs());
            }
        }
        checked += 1;
    }
    verdict(
        worst <= TFIDF_TOL,
        format!("max abs error {worst:.1e} over {checked} corpora ({empty} with empty vocabulary rejected as expected)"),
    )
}

fn rel_error(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt() + b.iter().map(|y| y * y).sum::<f64>().sqrt();
    if scale == 0.0 { 0.0 } else { diff / scale }
}

fn central_differences(params: &[f64], f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    (0..params.len())
        .map(|i| {
            let mut hi = params.to_vec();
            let mut lo = params.to_vec();
            hi[i] += FD_STEP;
            lo[i] -= FD_STEP;
            (f(&hi) - f(&lo)) / (2.0 * FD_STEP)
        })
        .collect()
}

fn gradient_checks() -> Outcome {
    const DIM: usize = 10;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let random = |n: usize, rng: &mut ChaCha8Rng| -> Vec<f64> { (0..n).map(|_| rng.random_range(-1.0..1.0)).collect() };
    let mut worst: BTreeMap<&str, f64> = BTreeMap::new();
    for (name, loss) in [("hinge", Loss::Hinge), ("squared_hinge", Loss::SquaredHinge), ("log (binary)", Loss::Log)] {
        let mut done = 0;
        let mut max_err: f64 = 0.0;
        while done < 50 {
            let w = random(DIM, &mut rng);
            let x = random(DIM, &mut rng);
            let b = rng.random_range(-1.0..1.0);
            let y = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let margin = y * (w.iter().zip(&x).map(|(a, c)| a * c).sum::<f64>() + b);
            if loss == Loss::Hinge && (margin - 1.0).abs() < HINGE_KINK_GAP {
                continue;
            }
            let (gw, gb) = binary_example_gradient(loss, &w, b, &x, y);
            let mut params = w.clone();
            params.push(b);
            let numeric = central_differences(&params, |p| binary_example_loss(loss, &p[..DIM], p[DIM], &x, y));
            let mut analytic = gw;
            analytic.push(gb);
            max_err = max_err.max(rel_error(&analytic, &numeric));
            done += 1;
        }
        worst.insert(name, max_err);
    }
    let k = 5;
    let mut max_err: f64 = 0.0;
    for _ in 0..50 {
        let w: Vec<Vec<f64>> = (0..k).map(|_| random(DIM, &mut rng)).collect();
        let b = random(k, &mut rng);
        let x = random(DIM, &mut rng);
        let target = rng.random_range(0..k);
        let (gw, gb) = softmax_example_gradient(&w, &b, &x, target);
        let mut params = w.concat();
        params.extend(&b);
        let numeric = central_differences(&params, |p| {
            let rows: Vec<Vec<f64>> = p[..k * DIM].chunks(DIM).map(<[f64]>::to_vec).collect();
            softmax_example_loss(&rows, &p[k * DIM..], &x, target)
        });
        let mut analytic = gw.concat();
        analytic.extend(gb);
        max_err = max_err.max(rel_error(&analytic, &numeric));
    }
    worst.insert("log (softmax)", max_err);
    let pass = worst.values().all(|&e| e <= FD_REL_TOL);
    let detail = worst.iter().map(|(n, e)| format!("{n} {e:.1e}")).collect::<Vec<_>>().join(", ");
    verdict(pass, format!("max relative error: {detail}"))
}

fn nb_closed_form() -> Outcome {
    let texts = ["x x y", "y z"];
    let y: Vec<VarietyLabel> = vec!["A".into(), "B".into()];
    let space = FeatureSpace::<f64>::fit(&texts, &TokenizerConfig::words(1, 1)).unwrap();
    let x = space.transform_all(&texts, Weighting::Counts);
    let model = train_nb(&x, &y, space.dim(), NbVariant::Multinomial, 1.0).unwrap();
    let ix = space.vocabulary().index_of("w:x").unwrap();
    let (pa, pb) = (model.likelihood(0, ix), model.likelihood(1, ix));
    let predicted = model.predict(&space.vectorize("x", Weighting::Counts)).unwrap().clone();
    verdict(
        pa == 0.5 && pb == 0.2 && predicted.as_str() == "A",
        format!("P(x|A) = {pa}, P(x|B) = {pb}, \"x\" -> {predicted}"),
    )
}

fn no_leakage() -> Outcome {
    let labels = ["A", "B", "C"];
    let set = LabelSet::new(labels).unwrap();
    let space = SearchSpace::svm();
    let base = PipelineConfig {
        model: ModelSpec::Sgd(TrainConfig { max_epochs: 10, ..Default::default() }),
        ..Default::default()
    };
    let mut folds_checked = 0;
    let mut leaked = 0u64;
    for run in 0..20u64 {
        let varieties = Varieties::new(&labels, 100 + run);
        let samples = varieties
            .records(12, run)
            .into_iter()
            .map(|(id, l, t)| Sample::new(id, t, VarietyLabel::new(l), ""))
            .collect();
        let corpus = LabeledCorpus::new(samples, set.clone()).unwrap();
        let texts: Vec<&str> = corpus.texts().collect();
        let tally = Mutex::new((0usize, 0u64));
        let search = RandomSearch {
            space: &space,
            base: &base,
            options: SearchOptions { n_iter: 1, folds: 5, seed: run, ..Default::default() },
            log_path: None,
            resume: false,
        };
        search
            .run_observed::<f64, _>(&corpus, |ctx: &FoldContext<f64>| {
                let cfg = ctx.space.config();
                let terms_of = |i: usize| -> HashSet<String> {
                    let mut terms: HashSet<String> =
                        char_ngrams(texts[i], cfg).iter().map(|g| Namespace::Char.term(g)).collect();
                    terms.extend(word_ngrams(texts[i], cfg).iter().map(|g| Namespace::Word.term(g)));
                    terms
                };
                let mut train_df: HashMap<String, u64> = HashMap::new();
                for &i in ctx.train {
                    for t in terms_of(i) {
                        *train_df.entry(t).or_default() += 1;
                    }
                }
                let vocab = ctx.space.vocabulary();
                let mut excess = (vocab.n_docs() as u64).abs_diff(ctx.train.len() as u64);
                for (i, term) in vocab.terms().iter().enumerate() {
                    excess += (vocab.doc_freq(i) as u64).abs_diff(train_df.get(term).copied().unwrap_or(0));
                }
                let mut t = tally.lock().unwrap();
                t.0 += 1;
                t.1 += excess;
            })
            .unwrap();
        let (folds, excess) = tally.into_inner().unwrap();
        folds_checked += folds;
        leaked += excess;
    }
    verdict(
        leaked == 0 && folds_checked == 100,
        format!("{folds_checked} folds over 20 runs, {leaked} document counts not explained by training folds"),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let v = Varieties::new(&["A", "B", "C"], 7);
    write_jsonl(&dir.path().join("train.jsonl"), &v.records(25, 1));
    write_config(
        dir.path(),
        &["A", "B", "C"],
        json!({"kind": "sgd", "loss": "squared_hinge", "max_epochs": 30}),
        json!({"search": {"n_iter": 5, "folds": 3}}),
    );
    let mut models = Vec::new();
    let mut logs = Vec::new();
    for run_dir in ["run1", "run2"] {
        for cmd in ["train", "tune"] {
            let out = run(dir.path(), &["--config", "config.json", cmd, "--train", "train.jsonl", "--output-dir", run_dir, "-q"]);
            if !out.status.success() {
                return verdict(false, format!("{cmd} failed: {}", stderr(&out)));
            }
        }
        let d = dir.path().join(run_dir);
        models.push((fs::read(d.join("model.json")).unwrap(), fs::read(d.join("features.json")).unwrap()));
        logs.push(fs::read(d.join("trials.jsonl")).unwrap());
    }
    let trials = String::from_utf8_lossy(&logs[0]).lines().count();
    verdict(
        models[0] == models[1] && logs[0] == logs[1] && trials == 5,
        format!(
            "model files identical: {}, trial logs identical: {} ({trials} trials)",
            models[0] == models[1],
            logs[0] == logs[1]
        ),
    )
}

const IDIOMS: [&str; 5] = ["Sursilvan", "Sutsilvan", "Surmiran", "Puter", "Vallader"];

struct TextbookSetup {
    train: LabeledCorpus,
    test: LabeledCorpus,
}

fn textbook_setup() -> Result<TextbookSetup, String> {
    let path = std::env::var_os(MEDIOMATIX_ENV)
        .map(PathBuf::from)
        .ok_or_else(|| format!("textbook corpus unavailable: set {MEDIOMATIX_ENV} to a JSONL export (text, label)"))?;
    let labels = LabelSet::new(IDIOMS).unwrap();
    let corpus = load_corpus(&path, CorpusFormat::from_path(&path), &labels).map_err(|e| e.to_string())?;
    let corpus = dedup_intra_class(&corpus.clean(&Cleaner::default(), CleanPolicy::Train));
    let counts = corpus.label_counts();
    let test_spec = SplitSpec::balanced("test", labels.labels(), 200, 42);
    let (test, rest) = build_split_with_rest(&corpus, &test_spec).map_err(|e| e.to_string())?;
    let rest_counts = rest.label_counts();
    let per_label = labels.labels().iter().map(|l| (l.clone(), rest_counts[l].min(2000))).collect();
    let train_spec = SplitSpec { name: "train".into(), per_label_counts: per_label, balanced: false, seed: 42 };
    let train = build_split(&rest, &train_spec).map_err(|e| e.to_string())?;
    log::info!("textbook corpus: {counts:?}");
    Ok(TextbookSetup { train, test })
}

fn textbook_config(adjust: impl FnOnce(&mut TokenizerConfig)) -> PipelineConfig {
    let mut features = TokenizerConfig { char_ngram_min: 1, char_ngram_max: 4, word_ngram_min: 1, word_ngram_max: 1, min_df: 2, ..Default::default() };
    adjust(&mut features);
    PipelineConfig {
        features,
        weighting: Weighting::TfIdf,
        model: ModelSpec::Sgd(TrainConfig { loss: Loss::SquaredHinge, ..Default::default() }),
    }
}

fn score(setup: &TextbookSetup, cfg: &PipelineConfig) -> (f64, f64) {
    let train_texts: Vec<&str> = setup.train.texts().collect();
    let fitted = cfg.fit::<f64>(&train_texts, &setup.train.labels()).unwrap();
    let test_texts: Vec<&str> = setup.test.texts().collect();
    let predicted = fitted.predict(&test_texts).unwrap();
    let m = metrics(&setup.test.labels(), &predicted, setup.test.label_set().labels()).unwrap();
    (m.accuracy, m.macro_f1)
}

fn textbook_end_to_end() -> Outcome {
    let start = Instant::now();
    let setup = match textbook_setup() {
        Ok(s) => s,
        Err(reason) => return verdict(false, reason),
    };
    let (accuracy, macro_f1) = score(&setup, &textbook_config(|_| {}));
    let secs = start.elapsed().as_secs_f64();
    verdict(
        accuracy >= E2E_MIN_ACCURACY && macro_f1 >= E2E_MIN_MACRO_F1 && secs < E2E_BUDGET_SECS,
        format!(
            "{} train / {} test samples, accuracy {}, macro F1 {}, {secs:.0}s",
            setup.train.len(),
            setup.test.len(),
            percent(accuracy),
            percent(macro_f1)
        ),
    )
}

fn ablation_direction() -> Outcome {
    let setup = match textbook_setup() {
        Ok(s) => s,
        Err(reason) => return verdict(false, reason),
    };
    let (_, base) = score(&setup, &textbook_config(|_| {}));
    let (_, within) = score(&setup, &textbook_config(|f| f.char_within_word_only = true));
    let (_, no_unigrams) = score(&setup, &textbook_config(|f| f.drop_char_unigrams = true));
    let (d_within, d_unigrams) = (within - base, no_unigrams - base);
    verdict(
        d_within <= ABLATION_MAX_GAIN && d_unigrams <= ABLATION_MAX_GAIN,
        format!(
            "macro F1 {}; within-word delta {:+.1}, no-unigram delta {:+.1} points",
            percent(base),
            100.0 * d_within,
            100.0 * d_unigrams
        ),
    )
}

fn masking_preservation() -> Outcome {
    use proptest::prelude::*;
    use proptest::test_runner::{Config, TestRunner};

    let labels = LabelSet::romansh();
    let corpus_strategy = prop::collection::vec(
        (0usize..6, "[a-zäöü]{1,8}( [A-Za-zäöü]{1,8}){0,6}", prop::sample::select(vec!["PG", "TB", "RTR"])),
        1..30,
    );
    let spans_strategy = prop::collection::vec((0usize..30, 0usize..60, 1usize..12, 0.9f64..1.0), 0..40);
    let mut runner = TestRunner::new(Config { cases: 100, ..Config::default() });
    let result = runner.run(&(corpus_strategy, spans_strategy), |(rows, raw_spans)| {
        let samples: Vec<Sample> = rows
            .iter()
            .enumerate()
            .map(|(i, (l, text, source))| {
                Sample::new(format!("s{i}"), text.clone(), labels.labels()[*l].clone(), *source)
            })
            .collect();
        let corpus = LabeledCorpus::new(samples, labels.clone()).unwrap();
        let spans: Vec<SpanAnnotation> = raw_spans
            .iter()
            .filter(|(i, ..)| *i < rows.len())
            .filter_map(|&(i, start, len, score)| {
                let n = rows[i].1.chars().count();
                (start < n).then(|| SpanAnnotation {
                    sample_id: format!("s{i}"),
                    start,
                    end: (start + len).min(n),
                    score,
                })
            })
            .collect();
        let masked = apply_mask(&corpus, &spans, &MaskingPolicy::default()).unwrap();
        prop_assert_eq!(masked.len(), corpus.len());
        prop_assert_eq!(masked.labels(), corpus.labels());
        let ids = |c: &LabeledCorpus| c.samples().iter().map(|s| s.id.clone()).collect::<Vec<_>>();
        prop_assert_eq!(ids(&masked), ids(&corpus));
        Ok(())
    });
    match result {
        Ok(()) => verdict(true, "count, ids and labels preserved on 100 random corpora"),
        Err(e) => verdict(false, e.to_string()),
    }
}

fn salted_feature() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let labels = ["X", "Y", "Z"];
    // the three classes share one vocabulary; only X carries the salt
    let v = Varieties::new(&["X"], 11);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut records = Vec::new();
    for i in 0..60 {
        for label in labels {
            let mut text = v.sentence(0, rng.random_range(5..10), &mut rng);
            if label == "X" {
                let mut words: Vec<String> = text.split(' ').map(str::to_owned).collect();
                let at = rng.random_range(0..words.len());
                words[at].push('ẹ');
                text = words.join(" ");
            }
            records.push((format!("{label}{i}"), label.to_string(), text));
        }
    }
    write_jsonl(&dir.path().join("train.jsonl"), &records);
    write_config(dir.path(), &labels, json!({"kind": "sgd", "loss": "squared_hinge"}), json!({}));
    let out = run(dir.path(), &["--config", "config.json", "train", "--train", "train.jsonl", "-q"]);
    if !out.status.success() {
        return verdict(false, format!("train failed: {}", stderr(&out)));
    }
    let out = run(dir.path(), &["inspect", "--model", "out/model.json", "-k", "3", "--json"]);
    if !out.status.success() {
        return verdict(false, format!("inspect failed: {}", stderr(&out)));
    }
    let listing: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let x = listing.as_array().unwrap().iter().find(|c| c["label"] == "X").unwrap();
    let terms: Vec<String> = x["features"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| format!("{}:{}", f["namespace"].as_str().unwrap(), f["term"].as_str().unwrap()))
        .collect();
    verdict(terms.iter().any(|t| t.contains('ẹ')), format!("top 3 for X: {terms:?}"))
}
