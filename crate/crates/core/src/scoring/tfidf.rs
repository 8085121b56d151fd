//! TF-IDF vectors and cosine similarity.
//!
//! * Tokens: split on every non-alphanumeric character and at camelCase
//!   boundaries, lowercase, drop tokens shorter than two characters.
//! * Term frequency is the raw count.
//! * `idf(t) = ln((1 + N) / (1 + df(t))) + 1` over a corpus of `N` documents.
//!
//! Vectors are kept in `BTreeMap`s so that sums run in a fixed order and
//! scores are bit-for-bit reproducible.

use std::collections::{BTreeMap, BTreeSet};

/// Splits `text` into lowercase terms.
///
/// ```
/// use tracelink::scoring::tfidf::tokenize;
/// assert_eq!(tokenize("parseHTTPHeader fix: a"), ["parse", "http", "header", "fix"]);
/// ```
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for word in text.split(|c: char| !c.is_alphanumeric()) {
        let chars: Vec<char> = word.chars().collect();
        let mut start = 0;
        for i in 1..chars.len() {
            let (prev, cur) = (chars[i - 1], chars[i]);
            let lower_to_upper = (prev.is_lowercase() || prev.is_numeric()) && cur.is_uppercase();
            let acronym_end = prev.is_uppercase()
                && cur.is_uppercase()
                && chars.get(i + 1).is_some_and(|n| n.is_lowercase());
            if lower_to_upper || acronym_end {
                push_token(&mut out, &chars[start..i]);
                start = i;
            }
        }
        push_token(&mut out, &chars[start..]);
    }
    out
}

fn push_token(out: &mut Vec<String>, chars: &[char]) {
    if chars.len() >= 2 {
        out.push(chars.iter().collect::<String>().to_lowercase());
    }
}

pub type SparseVector = BTreeMap<String, f64>;

/// Document frequencies of a fitted corpus.
#[derive(Debug, Clone, Default)]
pub struct TfIdfModel {
    n_docs: usize,
    df: BTreeMap<String, usize>,
}

impl TfIdfModel {
    pub fn fit<S: AsRef<str>>(corpus: &[S]) -> Self {
        let mut df = BTreeMap::new();
        for doc in corpus {
            let terms: BTreeSet<String> = tokenize(doc.as_ref()).into_iter().collect();
            for t in terms {
                *df.entry(t).or_insert(0) += 1;
            }
        }
        TfIdfModel {
            n_docs: corpus.len(),
            df,
        }
    }

    pub fn idf(&self, term: &str) -> f64 {
        let df = self.df.get(term).copied().unwrap_or(0);
        ((1.0 + self.n_docs as f64) / (1.0 + df as f64)).ln() + 1.0
    }

    pub fn vector(&self, text: &str) -> SparseVector {
        let mut tf: BTreeMap<String, f64> = BTreeMap::new();
        for t in tokenize(text) {
            *tf.entry(t).or_insert(0.0) += 1.0;
        }
        tf.into_iter()
            .map(|(t, count)| {
                let w = count * self.idf(&t);
                (t, w)
            })
            .collect()
    }

    pub fn similarity(&self, a: &str, b: &str) -> f64 {
        cosine(&self.vector(a), &self.vector(b))
    }
}

/// Cosine of two nonnegative sparse vectors, clamped to `[0, 1]`; 0 when either is all-zero.
pub fn cosine(a: &SparseVector, b: &SparseVector) -> f64 {
    let dot: f64 = a
        .iter()
        .filter_map(|(t, wa)| b.get(t).map(|wb| wa * wb))
        .sum();
    let na = a.values().map(|w| w * w).sum::<f64>().sqrt();
    let nb = b.values().map(|w| w * w).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na * nb)).clamp(0.0, 1.0)
}

/// TF-IDF cosine between `query` and `candidate`, with idf fitted on `corpus`.
pub fn tfidf_text_score<S: AsRef<str>>(query: &str, candidate: &str, corpus: &[S]) -> f64 {
    TfIdfModel::fit(corpus).similarity(query, candidate)
}
