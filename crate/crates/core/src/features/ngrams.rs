use std::borrow::Cow;

use unicode_normalization::UnicodeNormalization;

use super::TokenizerConfig;

/// Brings raw text into the form n-gram extraction expects: optionally NFC,
/// single spaces between tokens, no leading or trailing whitespace.
pub(crate) fn prepare<'a>(text: &'a str, config: &TokenizerConfig) -> Cow<'a, str> {
    let text: Cow<'a, str> = if config.unicode_nfc {
        Cow::Owned(text.nfc().collect())
    } else {
        Cow::Borrowed(text)
    };
    if is_normalized(&text) {
        text
    } else {
        Cow::Owned(text.split_whitespace().collect::<Vec<_>>().join(" "))
    }
}

fn is_normalized(text: &str) -> bool {
    let mut prev_space = true;
    for c in text.chars() {
        if c.is_whitespace() {
            if c != ' ' || prev_space {
                return false;
            }
            prev_space = true;
        } else {
            prev_space = false;
        }
    }
    !prev_space || text.is_empty()
}

/// Calls `emit` for every character n-gram of `text` as a slice of it.
///
/// `text` must already be prepared. N-grams count codepoints, not bytes.
pub(crate) fn for_each_char_ngram<'a>(
    text: &'a str,
    config: &TokenizerConfig,
    mut emit: impl FnMut(&'a str),
) {
    if !config.use_char_ngrams {
        return;
    }
    let (lo, hi) = config.effective_char_range();
    if lo > hi {
        return;
    }
    let mut scan = |segment: &'a str| {
        let mut bounds: Vec<usize> = segment.char_indices().map(|(i, _)| i).collect();
        bounds.push(segment.len());
        let n_chars = bounds.len() - 1;
        for n in lo..=hi.min(n_chars) {
            for start in 0..=n_chars - n {
                emit(&segment[bounds[start]..bounds[start + n]]);
            }
        }
    };
    if config.char_within_word_only {
        text.split(' ').filter(|t| !t.is_empty()).for_each(&mut scan);
    } else {
        scan(text);
    }
}

/// Calls `emit` for every word n-gram. In prepared text tokens are
/// separated by exactly one space, so joined n-grams are slices too.
pub(crate) fn for_each_word_ngram<'a>(
    text: &'a str,
    config: &TokenizerConfig,
    mut emit: impl FnMut(&'a str),
) {
    if !config.use_word_ngrams {
        return;
    }
    let spans: Vec<(usize, usize)> = text
        .split(' ')
        .filter(|t| !t.is_empty())
        .map(|t| {
            let start = t.as_ptr() as usize - text.as_ptr() as usize;
            (start, start + t.len())
        })
        .collect();
    for n in config.word_ngram_min..=config.word_ngram_max.min(spans.len()) {
        for w in spans.windows(n) {
            emit(&text[w[0].0..w[n - 1].1]);
        }
    }
}

/// All character n-grams of `text` under `config`, as a multiset.
pub fn char_ngrams(text: &str, config: &TokenizerConfig) -> Vec<String> {
    let prepared = prepare(text, config);
    let mut out = Vec::new();
    for_each_char_ngram(&prepared, config, |g| out.push(g.to_owned()));
    out
}

/// All word n-grams of `text` under `config`, as a multiset.
pub fn word_ngrams(text: &str, config: &TokenizerConfig) -> Vec<String> {
    let prepared = prepare(text, config);
    let mut out = Vec::new();
    for_each_word_ngram(&prepared, config, |g| out.push(g.to_owned()));
    out
}
