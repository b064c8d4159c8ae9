//! `idiomid predict`: label raw lines as JSONL.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use idiomid::corpus::{clean_text, CleanPolicy};
use idiomid::models::Classifier;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CliResult, Exit, OrExit};
use crate::evaluate::load;

#[derive(Serialize)]
struct Prediction<'a> {
    line: usize,
    label: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scores: Option<BTreeMap<&'a str, f64>>,
}

pub fn run(model: &Path, space: Option<&Path>, input: Option<&Path>, output: Option<&Path>, scores: bool) -> CliResult<()> {
    let loaded = load(model, space)?;
    let reader: Box<dyn BufRead> = match input {
        Some(p) => Box::new(BufReader::new(
            File::open(p).with_context(|| format!("opening {}", p.display())).or_exit(Exit::Data)?,
        )),
        None => Box::new(io::stdin().lock()),
    };
    let lines: Vec<String> = reader.lines().collect::<Result<_, _>>().context("reading input").or_exit(Exit::Data)?;

    let model = &loaded.file.model;
    let classes = model.classes();
    let results: Vec<Option<Vec<f64>>> = lines
        .par_iter()
        .map(|line| {
            clean_text(line, CleanPolicy::Eval)
                .map(|text| {
                    let x = loaded.space.vectorize(&text, loaded.file.weighting);
                    model.decision_scores(&x)
                })
                .transpose()
        })
        .collect::<Result<_, _>>()
        .or_exit(Exit::Evaluation)?;

    let mut out: Box<dyn Write> = match output {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display())).or_exit(Exit::Data)?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    for (i, result) in results.iter().enumerate() {
        let record = match result {
            None => Prediction { line: i + 1, label: None, reason: Some("rejected"), scores: None },
            Some(s) => Prediction {
                line: i + 1,
                label: Some(classes[idiomid::models::argmax(s)].as_str()),
                reason: None,
                scores: scores.then(|| classes.iter().map(|c| c.as_str()).zip(s.iter().copied()).collect()),
            },
        };
        let line = serde_json::to_string(&record).expect("prediction serializes");
        writeln!(out, "{line}").context("writing predictions").or_exit(Exit::Data)?;
    }
    out.flush().context("writing predictions").or_exit(Exit::Data)?;
    Ok(())
}
