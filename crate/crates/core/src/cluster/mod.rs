//! Dimensionality reduction and density-based clustering of sentence vectors.
//!
//! Vectors are reduced with UMAP under the cosine metric (PCA is available as
//! a deterministic stand-in) and clustered with HDBSCAN using leaf selection.
//! Cluster members are ranked by their HDBSCAN membership strength, so the
//! first member of a cluster is its most central sentence.

mod hdbscan;
mod pca;
mod umap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embed::EmbeddingMatrix;

pub use hdbscan::hdbscan;
pub use pca::PcaReducer;
pub use umap::{fit_curve_params, UmapReducer};

/// Low-dimensional coordinates, one row per input vector.
pub type ReducedMatrix = EmbeddingMatrix;

pub const NOISE: i32 = -1;

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("{points} points cannot be reduced to {components} components")]
    TooFewPoints { points: usize, components: usize },
    #[error("clustering has no clusters")]
    NoClusters,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ReducerMetric {
    #[default]
    Cosine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducerConfig {
    pub metric: ReducerMetric,
    pub n_neighbors: usize,
    pub n_components: usize,
    pub min_dist: f32,
    pub seed: u64,
}

impl Default for ReducerConfig {
    fn default() -> Self {
        Self {
            metric: ReducerMetric::Cosine,
            n_neighbors: 30,
            n_components: 10,
            min_dist: 0.0,
            seed: 0,
        }
    }
}

impl ReducerConfig {
    pub fn validate(&self) -> Result<(), ClusterError> {
        if self.n_neighbors < 2 {
            return Err(ClusterError::InvalidConfig("n_neighbors must be at least 2".into()));
        }
        if self.n_components < 2 {
            return Err(ClusterError::InvalidConfig("n_components must be at least 2".into()));
        }
        if !(self.min_dist >= 0.0) {
            return Err(ClusterError::InvalidConfig("min_dist must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ClusterMetric {
    #[default]
    Euclidean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    #[default]
    Leaf,
    Eom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CentroidKind {
    #[default]
    Mean,
    Medoid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClustererConfig {
    pub metric: ClusterMetric,
    pub selection: Selection,
    pub min_cluster_size: usize,
    pub regression_a: f64,
    pub regression_b: f64,
    #[serde(default)]
    pub centroid: CentroidKind,
}

impl Default for ClustererConfig {
    fn default() -> Self {
        Self {
            metric: ClusterMetric::Euclidean,
            selection: Selection::Leaf,
            min_cluster_size: 2,
            regression_a: REGRESSION_A,
            regression_b: REGRESSION_B,
            centroid: CentroidKind::Mean,
        }
    }
}

impl ClustererConfig {
    /// Config whose `min_cluster_size` follows the size regression for a
    /// discussion of `sentence_count` sentences.
    pub fn for_sentence_count(sentence_count: usize) -> Self {
        let mut cfg = Self::default();
        cfg.min_cluster_size =
            min_cluster_size_with(sentence_count, cfg.regression_a, cfg.regression_b);
        cfg
    }
}

pub const REGRESSION_A: f64 = 0.421;
pub const REGRESSION_B: f64 = 0.559;

/// Minimum cluster size for a discussion with `x` sentences:
/// `round(0.421 * x^0.559)`, halves rounded up, never below 2.
pub fn min_cluster_size_for(x: usize) -> usize {
    min_cluster_size_with(x, REGRESSION_A, REGRESSION_B)
}

pub fn min_cluster_size_with(x: usize, a: f64, b: f64) -> usize {
    let y = a * (x as f64).powf(b);
    ((y + 0.5).floor() as usize).max(2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub cluster_id: usize,
    /// Point indices, most central first.
    pub member_ids: Vec<usize>,
    pub centroid: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    /// Cluster id per point, or [`NOISE`].
    pub assignments: Vec<i32>,
    /// Membership strength per point in `[0, 1]`; zero for noise.
    pub lambda: Vec<f64>,
    pub clusters: Vec<Cluster>,
}

impl Clustering {
    pub fn all_noise(n: usize) -> Self {
        Self {
            assignments: vec![NOISE; n],
            lambda: vec![0.0; n],
            clusters: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn cluster(&self, cluster_id: usize) -> Option<&Cluster> {
        self.clusters.iter().find(|c| c.cluster_id == cluster_id)
    }

    pub fn noise_points(&self) -> impl Iterator<Item = usize> + '_ {
        self.assignments
            .iter()
            .enumerate()
            .filter(|(_, a)| **a == NOISE)
            .map(|(i, _)| i)
    }
}

/// Sorts every cluster's members by descending strength, then by index.
pub fn rank_by_centrality(mut clustering: Clustering) -> Clustering {
    let lambda = &clustering.lambda;
    for c in &mut clustering.clusters {
        c.member_ids.sort_by(|&a, &b| lambda[b].total_cmp(&lambda[a]).then(a.cmp(&b)));
    }
    clustering
}

/// Cluster whose centroid is closest to point `point_index`; ties go to the
/// smaller cluster id.
pub fn nearest_cluster(
    point_index: usize,
    clustering: &Clustering,
    points: &ReducedMatrix,
) -> Result<usize, ClusterError> {
    nearest_centroid(points.row(point_index), clustering)
}

pub fn nearest_centroid(point: &[f32], clustering: &Clustering) -> Result<usize, ClusterError> {
    let mut best: Option<(f64, usize)> = None;
    for c in &clustering.clusters {
        let d = squared_distance(point, &c.centroid);
        let better = match best {
            None => true,
            Some((bd, bid)) => d < bd || (d == bd && c.cluster_id < bid),
        };
        if better {
            best = Some((d, c.cluster_id));
        }
    }
    best.map(|(_, id)| id).ok_or(ClusterError::NoClusters)
}

pub(crate) fn squared_distance(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = f64::from(*x) - f64::from(*y);
            d * d
        })
        .sum()
}

/// Dimensionality reducer behind the cluster stage.
pub trait Reducer: Send + Sync {
    fn name(&self) -> &str;

    /// Reduces `input`; callers go through [`reduce`], which handles the
    /// empty and too-small cases.
    fn fit_transform(
        &self,
        input: &EmbeddingMatrix,
        cfg: &ReducerConfig,
    ) -> Result<ReducedMatrix, ClusterError>;
}

pub fn reduce(
    embeddings: &EmbeddingMatrix,
    cfg: &ReducerConfig,
    reducer: &dyn Reducer,
) -> Result<ReducedMatrix, ClusterError> {
    cfg.validate()?;
    if embeddings.is_empty() {
        return Ok(ReducedMatrix::empty(cfg.n_components));
    }
    if embeddings.len() < cfg.n_components {
        return Err(ClusterError::TooFewPoints {
            points: embeddings.len(),
            components: cfg.n_components,
        });
    }
    reducer.fit_transform(embeddings, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ReducerKind {
    #[default]
    Umap,
    Pca,
}

impl ReducerKind {
    pub fn build(self) -> Box<dyn Reducer> {
        match self {
            ReducerKind::Umap => Box::new(UmapReducer::default()),
            ReducerKind::Pca => Box::new(PcaReducer),
        }
    }
}

/// Reduction followed by HDBSCAN with a size-regression minimum cluster size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterPipeline {
    pub reducer: ReducerKind,
    pub reducer_config: ReducerConfig,
    pub clusterer_config: ClustererConfig,
    /// Fixed minimum cluster size; the regression is used when unset.
    pub min_cluster_size: Option<usize>,
}

impl Default for ClusterPipeline {
    fn default() -> Self {
        Self {
            reducer: ReducerKind::Umap,
            reducer_config: ReducerConfig::default(),
            clusterer_config: ClustererConfig::default(),
            min_cluster_size: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterRun {
    pub reduced: ReducedMatrix,
    pub clustering: Clustering,
    pub meta: ClusteringMeta,
}

impl ClusterPipeline {
    /// Clusters `embeddings`; `regression_input` is the sentence count fed to
    /// the size regression. Inputs too small to reduce come back all noise.
    pub fn run(
        &self,
        embeddings: &EmbeddingMatrix,
        regression_input: usize,
    ) -> Result<ClusterRun, ClusterError> {
        let mut clusterer = self.clusterer_config.clone();
        clusterer.min_cluster_size = self.min_cluster_size.unwrap_or_else(|| {
            min_cluster_size_with(regression_input, clusterer.regression_a, clusterer.regression_b)
        });
        let meta = ClusteringMeta {
            reducer: self.reducer.build().name().to_string(),
            reducer_config: self.reducer_config.clone(),
            clusterer_config: clusterer.clone(),
            regression_input,
            min_cluster_size: clusterer.min_cluster_size,
            embedding_model: String::new(),
        };
        if embeddings.len() < self.reducer_config.n_components.max(clusterer.min_cluster_size) {
            return Ok(ClusterRun {
                reduced: ReducedMatrix::empty(self.reducer_config.n_components),
                clustering: Clustering::all_noise(embeddings.len()),
                meta,
            });
        }
        let reducer = self.reducer.build();
        let reduced = reduce(embeddings, &self.reducer_config, reducer.as_ref())?;
        let clustering = hdbscan(&reduced, &clusterer);
        Ok(ClusterRun { reduced, clustering, meta })
    }
}

/// Provenance stored alongside a clustering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringMeta {
    pub reducer: String,
    pub reducer_config: ReducerConfig,
    pub clusterer_config: ClustererConfig,
    /// Sentence count fed to the size regression.
    pub regression_input: usize,
    pub min_cluster_size: usize,
    #[serde(default)]
    pub embedding_model: String,
}

/// On-disk clustering: `{"config", "assignments", "lambda", "clusters"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringArtifact {
    pub config: ClusteringMeta,
    #[serde(flatten)]
    pub clustering: Clustering,
}
