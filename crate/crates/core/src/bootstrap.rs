//! Two-step construction of a corpus meta-sentence list: corpus clusters
//! are exported to a review file, a reviewer sets `meta` on the clusters
//! that hold interaction boilerplate, and the import collects their
//! sentences.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::{rank_by_centrality, ClusterError, ClusterPipeline};
use crate::embed::EmbeddingMatrix;
use crate::metafilter::{normalize_whitespace, MetaSentenceList};

#[derive(Debug, Error)]
pub enum BootstrapError {
    #[error("{texts} sentences but {rows} embedding rows")]
    LengthMismatch { texts: usize, rows: usize },
    #[error("duplicate cluster id {0} in review file")]
    DuplicateCluster(usize),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewCluster {
    pub cluster_id: usize,
    pub size: usize,
    /// Set by the reviewer.
    #[serde(default)]
    pub meta: bool,
    /// Members, most central first.
    pub sentences: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewFile {
    pub corpus_size: usize,
    pub noise: usize,
    pub clusters: Vec<ReviewCluster>,
}

/// Clusters the pooled corpus sentences; clusters are listed by size,
/// largest first.
pub fn export_review(
    texts: &[String],
    embeddings: &EmbeddingMatrix,
    pipeline: &ClusterPipeline,
) -> Result<ReviewFile, BootstrapError> {
    if texts.len() != embeddings.len() {
        return Err(BootstrapError::LengthMismatch { texts: texts.len(), rows: embeddings.len() });
    }
    let run = pipeline.run(embeddings, embeddings.len())?;
    let clustering = rank_by_centrality(run.clustering);
    let mut clusters: Vec<ReviewCluster> = clustering
        .clusters
        .iter()
        .map(|c| ReviewCluster {
            cluster_id: c.cluster_id,
            size: c.member_ids.len(),
            meta: false,
            sentences: c.member_ids.iter().map(|&i| texts[i].clone()).collect(),
        })
        .collect();
    clusters.sort_by(|a, b| b.size.cmp(&a.size).then(a.cluster_id.cmp(&b.cluster_id)));
    let noise = clustering.assignments.iter().filter(|&&a| a < 0).count();
    Ok(ReviewFile { corpus_size: texts.len(), noise, clusters })
}

/// Sentences of every cluster marked meta, in file order and deduplicated.
pub fn import_review(review: &ReviewFile, source: &str) -> Result<MetaSentenceList, BootstrapError> {
    let mut ids = HashSet::new();
    for c in &review.clusters {
        if !ids.insert(c.cluster_id) {
            return Err(BootstrapError::DuplicateCluster(c.cluster_id));
        }
    }
    let sentences = review.clusters.iter().filter(|c| c.meta).flat_map(|c| c.sentences.iter().map(|s| normalize_whitespace(s)));
    Ok(MetaSentenceList::new(sentences, source))
}
