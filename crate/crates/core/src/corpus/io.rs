use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CorpusError, LabelSet, LabeledCorpus, Result, Sample, VarietyLabel};

/// On-disk corpus encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    /// One JSON object per line with `text`, `label` and optional `id`, `source`.
    Jsonl,
    /// `label<TAB>text` per line.
    Tsv,
}

impl CorpusFormat {
    /// Guesses from the file extension, defaulting to JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("tsv") | Some("txt") => Self::Tsv,
            _ => Self::Jsonl,
        }
    }
}

#[derive(Deserialize)]
struct JsonRecord {
    text: String,
    label: String,
    #[serde(default)]
    id: Option<String>,
    #[serde(default)]
    source: Option<String>,
}

#[derive(Serialize)]
struct JsonRecordOut<'a> {
    id: &'a str,
    label: &'a str,
    source: &'a str,
    text: &'a str,
}

/// Reads a corpus file. Record ids default to the 1-based line number.
pub fn load_corpus(path: &Path, format: CorpusFormat, labels: &LabelSet) -> Result<LabeledCorpus> {
    let content = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_owned(),
        source,
    })?;
    let corpus = parse_corpus(&content, format, labels, &path.display().to_string())?;
    if corpus.is_empty() {
        return Err(CorpusError::EmptyFile(path.to_owned()));
    }
    Ok(corpus)
}

/// Parses corpus content already in memory. `origin` names it in errors.
pub fn parse_corpus(
    content: &str,
    format: CorpusFormat,
    labels: &LabelSet,
    origin: &str,
) -> Result<LabeledCorpus> {
    let malformed = |line: usize, reason: String| CorpusError::MalformedRecord {
        path: origin.to_owned(),
        line,
        reason,
    };
    if content.starts_with('\u{feff}') {
        return Err(malformed(1, "byte-order mark is not allowed".into()));
    }
    let mut samples = Vec::new();
    for (i, line) in content.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (label, text, id, source) = match format {
            CorpusFormat::Jsonl => {
                let rec: JsonRecord = serde_json::from_str(line)
                    .map_err(|e| malformed(line_no, e.to_string()))?;
                (rec.label, rec.text, rec.id, rec.source)
            }
            CorpusFormat::Tsv => {
                let (label, text) = line
                    .split_once('\t')
                    .ok_or_else(|| malformed(line_no, "expected label<TAB>text".into()))?;
                (label.to_owned(), text.to_owned(), None, None)
            }
        };
        let label = labels
            .get(&label)
            .cloned()
            .ok_or_else(|| CorpusError::UnknownLabel {
                location: format!("{origin}:{line_no}"),
                label,
            })?;
        samples.push(Sample::new(
            id.unwrap_or_else(|| line_no.to_string()),
            text,
            label,
            source.unwrap_or_default(),
        ));
    }
    Ok(LabeledCorpus::from_parts_unchecked(samples, labels.clone()))
}

/// Writes a corpus as JSONL with keys `id`, `label`, `source`, `text`.
pub fn write_jsonl(corpus: &LabeledCorpus, path: &Path) -> Result<()> {
    let io_err = |source| CorpusError::Io {
        path: path.to_owned(),
        source,
    };
    let mut out = std::io::BufWriter::new(fs::File::create(path).map_err(io_err)?);
    for s in corpus.samples() {
        let rec = JsonRecordOut {
            id: &s.id,
            label: s.label.as_str(),
            source: &s.source,
            text: &s.text,
        };
        let line = serde_json::to_string(&rec).expect("string fields serialize");
        writeln!(out, "{line}").map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

/// Manual label corrections: sample id to corrected label.
pub type RelabelPatch = HashMap<String, VarietyLabel>;

/// Reads a relabel patch, one `id<TAB>label` per line.
pub fn load_relabel_patch(path: &Path, labels: &LabelSet) -> Result<RelabelPatch> {
    let content = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_owned(),
        source,
    })?;
    let mut patch = RelabelPatch::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (id, label) = line.split_once('\t').ok_or_else(|| CorpusError::MalformedRecord {
            path: path.display().to_string(),
            line: i + 1,
            reason: "expected id<TAB>label".into(),
        })?;
        let label = labels.get(label.trim()).cloned().ok_or_else(|| CorpusError::UnknownLabel {
            location: format!("{}:{}", path.display(), i + 1),
            label: label.trim().to_owned(),
        })?;
        patch.insert(id.to_owned(), label);
    }
    Ok(patch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn romansh() -> LabelSet {
        LabelSet::romansh()
    }

    #[test]
    fn parses_three_jsonl_records() {
        let content = r#"{"text":"Bun di","label":"Sursilvan","id":"a","source":"RTR"}
{"text":"Allegra","label":"RG"}

{"text":"Bun di","label":"Puter","source":"TB","extra":1}
"#;
        let c = parse_corpus(content, CorpusFormat::Jsonl, &romansh(), "mem").unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.samples()[0].id, "a");
        assert_eq!(c.samples()[0].source, "RTR");
        assert_eq!(c.samples()[1].id, "2");
        assert_eq!(c.samples()[2].id, "4");
    }

    #[test]
    fn unknown_label_is_rejected() {
        let err = parse_corpus(
            r#"{"text":"Hallo","label":"German"}"#,
            CorpusFormat::Jsonl,
            &romansh(),
            "mem",
        )
        .unwrap_err();
        assert!(matches!(err, CorpusError::UnknownLabel { ref label, .. } if label == "German"));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = parse_corpus(
            "{\"text\":\"a\",\"label\":\"RG\"}\n{\"text\":\"b\"}\n",
            CorpusFormat::Jsonl,
            &romansh(),
            "mem",
        )
        .unwrap_err();
        assert!(matches!(err, CorpusError::MalformedRecord { line: 2, .. }));
        let err = parse_corpus("RG no tab\n", CorpusFormat::Tsv, &romansh(), "mem").unwrap_err();
        assert!(matches!(err, CorpusError::MalformedRecord { line: 1, .. }));
    }

    #[test]
    fn empty_file_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.jsonl");
        fs::write(&path, "\n\n").unwrap();
        assert!(matches!(
            load_corpus(&path, CorpusFormat::Jsonl, &romansh()),
            Err(CorpusError::EmptyFile(_))
        ));
    }

    #[test]
    fn tsv_and_jsonl_encodings_agree() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let alphabet: Vec<char> = "abcäöüẹ .,!?\"\\/{}".chars().collect();
        let labels = romansh();
        let mut tsv = String::new();
        let mut jsonl = String::new();
        for _ in 0..100 {
            let len = rng.random_range(1..30);
            let text: String = (0..len)
                .map(|_| alphabet[rng.random_range(0..alphabet.len())])
                .collect();
            let label = &labels.labels()[rng.random_range(0..labels.len())];
            tsv.push_str(&format!("{label}\t{text}\n"));
            jsonl.push_str(&serde_json::json!({"text": text, "label": label}).to_string());
            jsonl.push('\n');
        }
        let a = parse_corpus(&tsv, CorpusFormat::Tsv, &labels, "tsv").unwrap();
        let b = parse_corpus(&jsonl, CorpusFormat::Jsonl, &labels, "jsonl").unwrap();
        assert_eq!(a.len(), 100);
        assert_eq!(a, b);
    }

    #[test]
    fn write_then_load_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let c = parse_corpus(
            "RG\tBun di \"tuts\"\nPuter\tAllegra\n",
            CorpusFormat::Tsv,
            &romansh(),
            "mem",
        )
        .unwrap();
        write_jsonl(&c, &path).unwrap();
        assert_eq!(load_corpus(&path, CorpusFormat::Jsonl, &romansh()).unwrap(), c);
    }

    #[test]
    fn relabel_patch_applies() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("patch.tsv");
        fs::write(&path, "2\tVallader\n").unwrap();
        let patch = load_relabel_patch(&path, &romansh()).unwrap();
        let c = parse_corpus("RG\ta\nPuter\tb\n", CorpusFormat::Tsv, &romansh(), "m").unwrap();
        let fixed = c.relabel(&patch).unwrap();
        assert_eq!(fixed.samples()[1].label.as_str(), "Vallader");
        assert_eq!(fixed.samples()[0].label.as_str(), "RG");
    }
}
