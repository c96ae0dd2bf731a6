//! Removal of meta-sentences: sentences about the conversation itself
//! ("I agree with you.") rather than its topic.
//!
//! Two passes run per discussion. Sentences equal to an entry of the corpus
//! meta list `M` are dropped outright. The remaining sentences `D` are then
//! clustered together with a random sample `M'` of the meta list; clusters
//! holding a disproportionate share of `M'` are treated as meta clusters, and
//! every discussion sentence inside one (or, for noise points, whose nearest
//! cluster is one) is omitted. The surviving sentences are clustered again on
//! their own.

use std::collections::HashSet;
use std::path::Path;

use rand::seq::index;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::{nearest_cluster, ClusterError, ClusterPipeline, ClusterRun, Clustering, ReducedMatrix, NOISE};
use crate::embed::{EmbedError, EmbeddingMatrix};
use crate::ingest::SentenceUnit;
use crate::seed;

#[derive(Debug, Error)]
pub enum MetaError {
    #[error("cluster {0} has no members")]
    EmptyCluster(usize),
    #[error("{what}: expected {expected} entries, got {got}")]
    LengthMismatch { what: &'static str, expected: usize, got: usize },
    #[error("invalid meta filter configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Corpus-level list of meta-sentences.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetaSentenceList {
    pub sentences: Vec<String>,
    pub source: String,
}

pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

impl MetaSentenceList {
    /// Builds a list, normalizing whitespace and keeping the first copy of
    /// duplicate entries.
    pub fn new(sentences: impl IntoIterator<Item = String>, source: impl Into<String>) -> Self {
        let mut seen = HashSet::new();
        let sentences = sentences
            .into_iter()
            .map(|s| normalize_whitespace(&s))
            .filter(|s| !s.is_empty() && seen.insert(s.clone()))
            .collect();
        Self { sentences, source: source.into() }
    }

    /// Parses the line format: one sentence per line, `#` starts a comment line.
    pub fn from_text(raw: &str, source: impl Into<String>) -> Self {
        let lines = raw
            .lines()
            .filter(|l| !l.trim_start().starts_with('#'))
            .map(String::from);
        Self::new(lines, source)
    }

    /// Starter list shipped with the crate.
    pub fn bundled() -> Self {
        Self::from_text(include_str!("../data/meta_sentences.txt"), "bundled")
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, MetaError> {
        let path = path.as_ref();
        let raw = std::fs::read_to_string(path)?;
        Ok(Self::from_text(&raw, path.display().to_string()))
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("# source: {}\n# size: {}\n", self.source, self.sentences.len());
        for s in &self.sentences {
            out.push_str(s);
            out.push('\n');
        }
        out
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SampleRule {
    /// `|M'| = max(floor, |D|)`, bounded by `|M|`.
    #[default]
    MaxAsWritten,
    /// `|M'| = min(floor, |D|)`.
    MinAlternative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PriorMode {
    /// `|M'| / |D|`, which exceeds 1 whenever `|M'| > |D|`.
    AsWritten,
    /// `|M'| / (|M'| + |D|)`.
    #[default]
    Normalized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetaFilterConfig {
    pub theta: f64,
    pub sample_floor: usize,
    pub sample_rule: SampleRule,
    pub prior_mode: PriorMode,
    pub seed: u64,
    /// Drop sentences equal to an entry of `M` before clustering.
    pub stop_list: bool,
}

impl Default for MetaFilterConfig {
    fn default() -> Self {
        Self {
            theta: 2.0 / 3.0,
            sample_floor: 300,
            sample_rule: SampleRule::MaxAsWritten,
            prior_mode: PriorMode::Normalized,
            seed: 0,
            stop_list: true,
        }
    }
}

impl MetaFilterConfig {
    pub fn validate(&self) -> Result<(), MetaError> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(MetaError::InvalidConfig(format!("theta {} not in (0, 1]", self.theta)));
        }
        if self.sample_floor == 0 {
            return Err(MetaError::InvalidConfig("sample_floor must be at least 1".into()));
        }
        Ok(())
    }

    pub fn sample_size(&self, meta_size: usize, discussion_size: usize) -> usize {
        let wanted = match self.sample_rule {
            SampleRule::MaxAsWritten => self.sample_floor.max(discussion_size),
            SampleRule::MinAlternative => self.sample_floor.min(discussion_size),
        };
        wanted.min(meta_size)
    }

    /// Prior share of meta-sentences in the joint set.
    pub fn prior(&self, sample_size: usize, discussion_size: usize) -> f64 {
        let (m, d) = (sample_size as f64, discussion_size as f64);
        match self.prior_mode {
            PriorMode::AsWritten => m / d,
            PriorMode::Normalized => m / (m + d),
        }
    }
}

/// Indices into `meta.sentences` of a uniform sample without replacement,
/// in ascending order.
pub fn sample_meta_indices(meta: &MetaSentenceList, discussion_size: usize, cfg: &MetaFilterConfig) -> Vec<usize> {
    let amount = cfg.sample_size(meta.len(), discussion_size);
    let mut rng = seed::rng(cfg.seed);
    let mut picked = index::sample(&mut rng, meta.len(), amount).into_vec();
    picked.sort_unstable();
    picked
}

pub fn sample_meta(meta: &MetaSentenceList, discussion_size: usize, cfg: &MetaFilterConfig) -> Vec<String> {
    sample_meta_indices(meta, discussion_size, cfg)
        .into_iter()
        .map(|i| meta.sentences[i].clone())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterVerdict {
    pub cluster_id: usize,
    pub m_c: usize,
    pub d_c: usize,
    pub p_meta_given_c: f64,
    pub is_meta: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmitReason {
    InMetaCluster,
    NearestIsMeta,
    StopList,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceVerdict {
    pub sentence_id: usize,
    pub omitted: bool,
    pub reason: Option<OmitReason>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaVerdict {
    pub discussion_size: usize,
    pub sample_size: usize,
    pub prior: f64,
    pub threshold: f64,
    pub clusters: Vec<ClusterVerdict>,
    pub sentences: Vec<SentenceVerdict>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl MetaVerdict {
    pub fn omitted_count(&self) -> usize {
        self.sentences.iter().filter(|s| s.omitted).count()
    }

    pub fn filtered_fraction(&self) -> f64 {
        if self.sentences.is_empty() {
            0.0
        } else {
            self.omitted_count() as f64 / self.sentences.len() as f64
        }
    }
}

/// Classifies every cluster of a joint clustering and marks the discussion
/// points to omit. `meta_flags[i]` tells whether point `i` came from the meta
/// sample; the returned sentence verdicts cover the other points, in order,
/// with `sentence_id` set to the point index.
pub fn classify_meta_clusters(
    clustering: &Clustering,
    points: &ReducedMatrix,
    meta_flags: &[bool],
    discussion_size: usize,
    sample_size: usize,
    cfg: &MetaFilterConfig,
) -> Result<MetaVerdict, MetaError> {
    cfg.validate()?;
    if meta_flags.len() != clustering.len() {
        return Err(MetaError::LengthMismatch {
            what: "meta flags",
            expected: clustering.len(),
            got: meta_flags.len(),
        });
    }
    let prior = cfg.prior(sample_size, discussion_size);
    let threshold = cfg.theta * prior;
    let mut warnings = Vec::new();
    if cfg.prior_mode == PriorMode::AsWritten && prior >= 1.0 {
        let msg = format!(
            "prior |M'|/|D| = {sample_size}/{discussion_size} = {prior:.3} is at least 1; with theta {} no cluster can exceed it unless theta * prior < 1",
            cfg.theta
        );
        log::warn!("{msg}");
        warnings.push(msg);
    }

    let mut verdicts = Vec::with_capacity(clustering.clusters.len());
    for c in &clustering.clusters {
        let m_c = c.member_ids.iter().filter(|&&p| meta_flags[p]).count();
        let d_c = c.member_ids.len() - m_c;
        if m_c + d_c == 0 {
            return Err(MetaError::EmptyCluster(c.cluster_id));
        }
        let p = m_c as f64 / (m_c + d_c) as f64;
        verdicts.push(ClusterVerdict {
            cluster_id: c.cluster_id,
            m_c,
            d_c,
            p_meta_given_c: p,
            is_meta: p > threshold,
        });
    }
    let is_meta = |cluster_id: usize| {
        verdicts
            .iter()
            .find(|v| v.cluster_id == cluster_id)
            .is_some_and(|v| v.is_meta)
    };

    let mut sentences = Vec::new();
    for (point, &flag) in meta_flags.iter().enumerate() {
        if flag {
            continue;
        }
        let assigned = clustering.assignments[point];
        let reason = if assigned != NOISE {
            is_meta(assigned as usize).then_some(OmitReason::InMetaCluster)
        } else if clustering.clusters.is_empty() {
            None
        } else {
            let nearest = nearest_cluster(point, clustering, points)?;
            is_meta(nearest).then_some(OmitReason::NearestIsMeta)
        };
        sentences.push(SentenceVerdict { sentence_id: point, omitted: reason.is_some(), reason });
    }

    Ok(MetaVerdict {
        discussion_size,
        sample_size,
        prior,
        threshold,
        clusters: verdicts,
        sentences,
        warnings,
    })
}

/// Result of filtering one discussion.
#[derive(Debug, Clone)]
pub struct FilterOutcome {
    pub kept_units: Vec<SentenceUnit>,
    pub kept_embeddings: EmbeddingMatrix,
    /// Clustering of the kept sentences alone; point `i` is `kept_units[i]`.
    pub clustering: ClusterRun,
    /// Verdict in sentence-id space, covering every input unit.
    pub verdict: MetaVerdict,
}

/// Runs stop-list removal, joint clustering with a meta sample, meta-cluster
/// classification, and re-clustering of the kept sentences.
///
/// `meta_embeddings` row `i` must embed `meta.sentences[i]`.
pub fn filter_discussion(
    units: &[SentenceUnit],
    embeddings: &EmbeddingMatrix,
    meta: &MetaSentenceList,
    meta_embeddings: &EmbeddingMatrix,
    cfg: &MetaFilterConfig,
    pipeline: &ClusterPipeline,
) -> Result<FilterOutcome, MetaError> {
    cfg.validate()?;
    if embeddings.len() != units.len() {
        return Err(MetaError::LengthMismatch {
            what: "discussion embeddings",
            expected: units.len(),
            got: embeddings.len(),
        });
    }
    if meta_embeddings.len() != meta.len() {
        return Err(MetaError::LengthMismatch {
            what: "meta embeddings",
            expected: meta.len(),
            got: meta_embeddings.len(),
        });
    }

    let stop: HashSet<&str> = meta.sentences.iter().map(String::as_str).collect();
    let mut verdicts: Vec<SentenceVerdict> = units
        .iter()
        .map(|u| {
            let stopped = cfg.stop_list && stop.contains(normalize_whitespace(&u.text).as_str());
            SentenceVerdict {
                sentence_id: u.sentence_id,
                omitted: stopped,
                reason: stopped.then_some(OmitReason::StopList),
            }
        })
        .collect();
    let candidates: Vec<usize> = (0..units.len()).filter(|&i| !verdicts[i].omitted).collect();
    let discussion_size = candidates.len();

    let sample = if meta.is_empty() || discussion_size == 0 {
        Vec::new()
    } else {
        sample_meta_indices(meta, discussion_size, cfg)
    };
    let mut joint_verdict = MetaVerdict {
        discussion_size,
        sample_size: sample.len(),
        prior: if sample.is_empty() { 0.0 } else { cfg.prior(sample.len(), discussion_size) },
        threshold: 0.0,
        clusters: Vec::new(),
        sentences: Vec::new(),
        warnings: Vec::new(),
    };
    if !sample.is_empty() {
        let joint = embeddings.select(&candidates).vstack(&meta_embeddings.select(&sample))?;
        let run = pipeline.run(&joint, discussion_size)?;
        let mut flags = vec![false; discussion_size];
        flags.resize(joint.len(), true);
        joint_verdict = classify_meta_clusters(
            &run.clustering,
            &run.reduced,
            &flags,
            discussion_size,
            sample.len(),
            cfg,
        )?;
        for v in &joint_verdict.sentences {
            let unit_index = candidates[v.sentence_id];
            verdicts[unit_index].omitted = v.omitted;
            verdicts[unit_index].reason = v.reason;
        }
    }

    let kept: Vec<usize> = (0..units.len()).filter(|&i| !verdicts[i].omitted).collect();
    let kept_units: Vec<SentenceUnit> = kept.iter().map(|&i| units[i].clone()).collect();
    let kept_embeddings = embeddings.select(&kept);
    let clustering = pipeline.run(&kept_embeddings, kept.len())?;

    Ok(FilterOutcome {
        kept_units,
        kept_embeddings,
        clustering,
        verdict: MetaVerdict { sentences: verdicts, ..joint_verdict },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::Cluster;

    fn meta_list(n: usize) -> MetaSentenceList {
        MetaSentenceList::new((0..n).map(|i| format!("meta sentence {i}")), "test")
    }

    #[test]
    fn sample_sizes_follow_the_rule() {
        let cfg = MetaFilterConfig::default();
        assert_eq!(sample_meta(&meta_list(955), 100, &cfg).len(), 300);
        assert_eq!(sample_meta(&meta_list(955), 1200, &cfg).len(), 955);
        let min_rule = MetaFilterConfig { sample_rule: SampleRule::MinAlternative, ..cfg.clone() };
        assert_eq!(sample_meta(&meta_list(955), 100, &min_rule).len(), 100);
    }

    #[test]
    fn sampling_is_seeded_and_without_replacement() {
        let cfg = MetaFilterConfig { seed: 3, ..MetaFilterConfig::default() };
        let a = sample_meta_indices(&meta_list(955), 100, &cfg);
        assert_eq!(a, sample_meta_indices(&meta_list(955), 100, &cfg));
        assert_eq!(a.iter().collect::<HashSet<_>>().len(), a.len());
        let other = MetaFilterConfig { seed: 4, ..cfg };
        assert_ne!(a, sample_meta_indices(&meta_list(955), 100, &other));
    }

    #[test]
    fn list_format_dedupes_and_skips_comments() {
        let list = MetaSentenceList::from_text("# header\nI agree.\n  I   agree. \n\nThanks!\n", "f");
        assert_eq!(list.sentences, ["I agree.", "Thanks!"]);
        let again = MetaSentenceList::from_text(&list.to_text(), "f");
        assert_eq!(again.sentences, list.sentences);
    }

    #[test]
    fn bundled_list_has_no_duplicates() {
        let list = MetaSentenceList::bundled();
        assert!(list.len() > 150);
        let raw_lines = include_str!("../data/meta_sentences.txt").lines().filter(|l| !l.starts_with('#')).count();
        assert_eq!(list.len(), raw_lines);
    }

    fn single_cluster(m_c: usize, d_c: usize) -> (Clustering, Vec<bool>) {
        let n = m_c + d_c;
        let clustering = Clustering {
            assignments: vec![0; n],
            lambda: vec![1.0; n],
            clusters: vec![Cluster { cluster_id: 0, member_ids: (0..n).collect(), centroid: vec![0.0] }],
        };
        let flags = (0..n).map(|i| i < m_c).collect();
        (clustering, flags)
    }

    #[test]
    fn worked_threshold_example() {
        let (c, flags) = single_cluster(8, 2);
        let points = ReducedMatrix::from_flat(1, vec![0.0; 10]).unwrap();
        let v = classify_meta_clusters(&c, &points, &flags, 100, 300, &MetaFilterConfig::default()).unwrap();
        assert_eq!(v.clusters[0].p_meta_given_c, 0.8);
        assert!((v.threshold - 0.5).abs() < 1e-12);
        assert!(v.clusters[0].is_meta);
        assert_eq!(v.omitted_count(), 2);
    }

    #[test]
    fn pure_discussion_cluster_is_never_meta() {
        let (c, flags) = single_cluster(0, 7);
        let points = ReducedMatrix::from_flat(1, vec![0.0; 7]).unwrap();
        let v = classify_meta_clusters(&c, &points, &flags, 7, 300, &MetaFilterConfig::default()).unwrap();
        assert!(!v.clusters[0].is_meta);
        assert_eq!(v.omitted_count(), 0);
    }

    #[test]
    fn literal_prior_warns_when_at_least_one() {
        let (c, flags) = single_cluster(3, 0);
        let points = ReducedMatrix::from_flat(1, vec![0.0; 3]).unwrap();
        let cfg = MetaFilterConfig { prior_mode: PriorMode::AsWritten, ..MetaFilterConfig::default() };
        let v = classify_meta_clusters(&c, &points, &flags, 100, 300, &cfg).unwrap();
        assert_eq!(v.prior, 3.0);
        assert!(!v.clusters[0].is_meta);
        assert_eq!(v.warnings.len(), 1);
    }
}
