use std::collections::HashMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RougeVariant {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
    Lcs,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl RougeScore {
    fn from_counts(matched: usize, candidate: usize, reference: usize) -> Self {
        let ratio = |d: usize| if d == 0 { 0.0 } else { matched as f64 / d as f64 };
        let (precision, recall) = (ratio(candidate), ratio(reference));
        let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        Self { precision, recall, f1 }
    }
}

/// Lowercases, deletes every character that is neither alphanumeric nor
/// whitespace, and splits on whitespace. "Don't stop!" gives `dont stop`.
pub fn tokenize(text: &str) -> Vec<String> {
    let cleaned: String =
        text.chars().filter(|c| c.is_alphanumeric() || c.is_whitespace()).flat_map(char::to_lowercase).collect();
    cleaned.split_whitespace().map(str::to_string).collect()
}

pub fn rouge(candidate: &str, reference: &str, variant: RougeVariant) -> RougeScore {
    let (c, r) = (tokenize(candidate), tokenize(reference));
    match variant {
        RougeVariant::One => ngram_score(&c, &r, 1),
        RougeVariant::Two => ngram_score(&c, &r, 2),
        RougeVariant::Lcs => RougeScore::from_counts(lcs_len(&c, &r), c.len(), r.len()),
    }
}

fn ngrams(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    for w in tokens.windows(n) {
        *counts.entry(w).or_insert(0) += 1;
    }
    counts
}

fn ngram_score(c: &[String], r: &[String], n: usize) -> RougeScore {
    let (cc, rc) = (ngrams(c, n), ngrams(r, n));
    let matched = cc.iter().map(|(g, &k)| k.min(rc.get(g).copied().unwrap_or(0))).sum();
    RougeScore::from_counts(matched, cc.values().sum(), rc.values().sum())
}

fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { up.max(row[j]) };
            diag = up;
        }
    }
    row[b.len()]
}
