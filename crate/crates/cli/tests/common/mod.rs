#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

pub fn idiomid() -> Command {
    Command::new(env!("CARGO_BIN_EXE_idiomid"))
}

pub fn run(dir: &Path, args: &[&str]) -> Output {
    idiomid()
        .args(args)
        .current_dir(dir)
        .stdin(Stdio::null())
        .output()
        .expect("binary runs")
}

pub fn run_with_stdin(dir: &Path, args: &[&str], stdin: &str) -> Output {
    use std::io::Write;
    let mut child = idiomid()
        .args(args)
        .current_dir(dir)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Word lists for synthetic varieties: a shared core plus words of their own.
pub struct Varieties {
    pub labels: Vec<String>,
    shared: Vec<String>,
    own: Vec<Vec<String>>,
}

const SYLLABLES: [&str; 16] = [
    "ch", "au", "tg", "an", "sa", "vi", "ns", "ur", "ie", "ou", "el", "ra", "gl", "ös", "üt", "ei",
];

fn pseudo_word(rng: &mut ChaCha8Rng) -> String {
    let n = rng.random_range(1..=3);
    (0..n).map(|_| *SYLLABLES.choose(rng).unwrap()).collect()
}

impl Varieties {
    pub fn new(labels: &[&str], seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut used = std::collections::HashSet::new();
        let mut fresh = |n: usize| -> Vec<String> {
            let mut words = Vec::new();
            while words.len() < n {
                let w = pseudo_word(&mut rng);
                if used.insert(w.clone()) {
                    words.push(w);
                }
            }
            words
        };
        let shared = fresh(30);
        let own = labels.iter().map(|_| fresh(25)).collect();
        Self {
            labels: labels.iter().map(|s| s.to_string()).collect(),
            shared,
            own,
        }
    }

    /// A sentence of `len` words, the first and about half of the rest
    /// from the variety's own list.
    pub fn sentence(&self, class: usize, len: usize, rng: &mut ChaCha8Rng) -> String {
        (0..len)
            .map(|i| {
                if i == 0 || rng.random_bool(0.5) {
                    self.own[class].choose(rng).unwrap().clone()
                } else {
                    self.shared.choose(rng).unwrap().clone()
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// `(id, label, text)` records, `per_class` of each variety.
    pub fn records(&self, per_class: usize, seed: u64) -> Vec<(String, String, String)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        for i in 0..per_class {
            for (c, label) in self.labels.iter().enumerate() {
                let len = rng.random_range(4..12);
                out.push((format!("{label}-{seed}-{i}"), label.clone(), self.sentence(c, len, &mut rng)));
            }
        }
        out
    }
}

pub fn write_jsonl(path: &Path, records: &[(String, String, String)]) {
    let body: String = records
        .iter()
        .map(|(id, label, text)| json!({"id": id, "label": label, "text": text}).to_string() + "\n")
        .collect();
    fs::write(path, body).unwrap();
}

/// Writes a config using the given labels and model section; returns its path.
pub fn write_config(dir: &Path, labels: &[&str], model: serde_json::Value, extra: serde_json::Value) -> PathBuf {
    let mut cfg = json!({
        "version": 1,
        "labels": labels,
        "pipeline": {"model": model},
        "output_dir": "out",
    });
    if let (Some(obj), Some(more)) = (cfg.as_object_mut(), extra.as_object()) {
        for (k, v) in more {
            obj.insert(k.clone(), v.clone());
        }
    }
    let path = dir.join("config.json");
    fs::write(&path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    path
}
