//! `idiomid inspect`: most discriminative features per class.

use std::path::Path;

use idiomid::models::{top_features, ClassFeatures, Model};

use crate::error::{fail, CliResult, Exit, OrExit};
use crate::evaluate::load;

/// Makes spaces inside n-grams visible.
pub fn visible(term: &str) -> String {
    term.replace(' ', "\u{2423}")
}

pub fn render(classes: &[ClassFeatures<f64>]) -> String {
    let mut out = String::new();
    for c in classes {
        out.push_str(c.label.as_str());
        out.push('\n');
        for (rank, f) in c.features.iter().enumerate() {
            out.push_str(&format!("  {:>2}  {:<4}  {:<16}  {:.4}\n", rank + 1, f.namespace, visible(&f.term), f.weight));
        }
    }
    out
}

pub fn run(model: &Path, space: Option<&Path>, k: usize, json: bool) -> CliResult<()> {
    let loaded = load(model, space)?;
    let Model::Linear(linear) = &loaded.file.model else {
        return fail(Exit::Evaluation, "feature inspection needs a linear model");
    };
    let top = top_features(linear, &loaded.space, k).or_exit(Exit::Evaluation)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&top).expect("features serialize"));
    } else {
        print!("{}", render(&top));
    }
    Ok(())
}
