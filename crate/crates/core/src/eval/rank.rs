use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{EvalError, PreferenceRanking};

pub const RRF_K: u32 = 60;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusedScore {
    pub model_id: String,
    pub score: f64,
}

/// Reciprocal rank fusion with 1-based ranks. Best first; equal scores are
/// ordered by model id.
pub fn rrf_fuse(rankings: &[PreferenceRanking], k_const: u32) -> Result<Vec<FusedScore>, EvalError> {
    let first = rankings.first().ok_or(EvalError::NoRankings)?;
    let models: BTreeSet<&str> = first.ranking.iter().map(String::as_str).collect();
    if models.len() != first.ranking.len() {
        return Err(EvalError::InconsistentModelSets { index: 0 });
    }
    // Rank histograms keep the float sum independent of ranking order.
    let mut rank_counts: BTreeMap<&str, Vec<u64>> = models.iter().map(|m| (*m, vec![0; models.len()])).collect();
    for (index, r) in rankings.iter().enumerate() {
        let set: BTreeSet<&str> = r.ranking.iter().map(String::as_str).collect();
        if set != models || r.ranking.len() != models.len() {
            return Err(EvalError::InconsistentModelSets { index });
        }
        for (pos, m) in r.ranking.iter().enumerate() {
            rank_counts.get_mut(m.as_str()).expect("model in set")[pos] += 1;
        }
    }
    let mut fused: Vec<FusedScore> = rank_counts
        .into_iter()
        .map(|(m, counts)| {
            let score = counts
                .iter()
                .enumerate()
                .map(|(pos, &c)| c as f64 / (f64::from(k_const) + (pos + 1) as f64))
                .sum();
            FusedScore { model_id: m.to_string(), score }
        })
        .collect();
    fused.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.model_id.cmp(&b.model_id)));
    Ok(fused)
}

/// Kendall's coefficient of concordance for `m` judges (rows) each giving
/// the ranks `1..=n` to `n` items (columns). Ties are not supported.
pub fn kendalls_w(ranks: &[Vec<usize>]) -> Result<f64, EvalError> {
    let m = ranks.len();
    if m == 0 {
        return Err(EvalError::DegenerateInput("no judges".into()));
    }
    let n = ranks[0].len();
    if n < 2 {
        return Err(EvalError::DegenerateInput(format!("{n} items")));
    }
    let mut sums = vec![0.0f64; n];
    for (j, row) in ranks.iter().enumerate() {
        let mut sorted = row.clone();
        sorted.sort_unstable();
        if sorted != (1..=n).collect::<Vec<_>>() {
            return Err(EvalError::DegenerateInput(format!("judge {j} does not rank 1..={n}")));
        }
        for (s, &r) in sums.iter_mut().zip(row) {
            *s += r as f64;
        }
    }
    let (m, nf) = (m as f64, n as f64);
    let mean = m * (nf + 1.0) / 2.0;
    let s: f64 = sums.iter().map(|r| (r - mean).powi(2)).sum();
    Ok(12.0 * s / (m * m * (nf.powi(3) - nf)))
}

/// Kendall's W per item, with judges' model orders turned into rank rows
/// over the sorted model ids.
pub fn concordance_by_item(rankings: &[PreferenceRanking]) -> Result<BTreeMap<String, f64>, EvalError> {
    let mut by_item: BTreeMap<&str, Vec<&PreferenceRanking>> = BTreeMap::new();
    for r in rankings {
        by_item.entry(&r.item_id).or_default().push(r);
    }
    let mut out = BTreeMap::new();
    for (item, group) in by_item {
        let models: BTreeSet<&str> = group[0].ranking.iter().map(String::as_str).collect();
        let mut rows = Vec::with_capacity(group.len());
        for r in &group {
            let set: BTreeSet<&str> = r.ranking.iter().map(String::as_str).collect();
            if set != models || r.ranking.len() != models.len() {
                let index = rankings.iter().position(|x| std::ptr::eq(x, *r)).unwrap_or(0);
                return Err(EvalError::InconsistentModelSets { index });
            }
            rows.push(models.iter().map(|m| r.ranking.iter().position(|x| x == m).expect("in set") + 1).collect());
        }
        out.insert(item.to_string(), kendalls_w(&rows)?);
    }
    Ok(out)
}
