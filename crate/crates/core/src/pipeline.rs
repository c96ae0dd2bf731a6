//! Stage functions, run configuration and the on-disk artifact layout that
//! tie the modules into one end-to-end run.
//!
//! Layout of an artifact directory:
//!
//! ```text
//! <root>/<discussion_id>/sentences.json
//! <root>/<discussion_id>/embeddings.txt
//! <root>/<discussion_id>/embeddings.json
//! <root>/<discussion_id>/filter.json
//! <root>/<discussion_id>/clusters.json
//! <root>/<discussion_id>/models/<model>/labels.json
//! <root>/<discussion_id>/models/<model>/frames.json
//! <root>/<discussion_id>/models/<model>/summary.json
//! <root>/<discussion_id>/models/<model>/summary.md
//! ```

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::{
    rank_by_centrality, CentroidKind, ClusterError, ClusterPipeline, ClusterRun, ClustererConfig, ClusteringArtifact,
    ReducerConfig, ReducerKind, Selection,
};
use crate::embed::{
    embed_sentences, EmbedError, EmbedOptions, EmbeddingMatrix, EmbeddingProvider, FileProvider, HashingProvider,
    HttpProvider,
};
use crate::framing::{FrameFailure, FramePromptConfig, FramesArtifact, Framer, FramingError, FrameInventory};
use crate::http::RetryPolicy;
use crate::ingest::{filter_noise_replies, segment_sentences, Discussion, IngestError, NoisePatterns, RuleSegmenter, SentenceUnit};
use crate::labeling::{Labeler, LabelingError, LabelsArtifact};
use crate::llm::{Backend, Catalog, HttpBackend, LlmError, MockBackend, ReplayBackend};
use crate::metafilter::{filter_discussion, MetaError, MetaFilterConfig, MetaSentenceList, MetaVerdict};
use crate::seed;
use crate::summary::{assemble, IndicativeSummary, SummaryError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Meta(#[from] MetaError),
    #[error(transparent)]
    Labeling(#[from] LabelingError),
    #[error(transparent)]
    Framing(#[from] FramingError),
    #[error(transparent)]
    Summary(#[from] SummaryError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("inconsistent artifacts: {0}")]
    Artifact(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    #[default]
    Hashing,
    File,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedConfig {
    pub provider: ProviderKind,
    /// Vector size of the hashing provider.
    pub dim: usize,
    /// Model name sent to the HTTP provider.
    pub model: String,
    /// Sidecar with discussion vectors for the file provider.
    pub path: Option<PathBuf>,
    /// Sidecar with meta-list vectors for the file provider; row ids are
    /// positions in the meta list.
    pub meta_path: Option<PathBuf>,
    pub batch_size: usize,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        Self { provider: ProviderKind::Hashing, dim: 256, model: String::new(), path: None, meta_path: None, batch_size: 64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterConfig {
    pub reducer: ReducerKind,
    pub n_neighbors: usize,
    pub n_components: usize,
    pub min_dist: f32,
    pub selection: Selection,
    pub centroid: CentroidKind,
    /// Overrides the size regression.
    pub min_cluster_size: Option<usize>,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        let r = ReducerConfig::default();
        let c = ClustererConfig::default();
        Self {
            reducer: ReducerKind::Umap,
            n_neighbors: r.n_neighbors,
            n_components: r.n_components,
            min_dist: r.min_dist,
            selection: c.selection,
            centroid: c.centroid,
            min_cluster_size: None,
        }
    }
}

impl ClusterConfig {
    pub fn pipeline(&self, master_seed: u64) -> ClusterPipeline {
        ClusterPipeline {
            reducer: self.reducer,
            reducer_config: ReducerConfig {
                n_neighbors: self.n_neighbors,
                n_components: self.n_components,
                min_dist: self.min_dist,
                seed: seed::derive(master_seed, "reducer"),
                ..ReducerConfig::default()
            },
            clusterer_config: ClustererConfig { selection: self.selection, centroid: self.centroid, ..ClustererConfig::default() },
            min_cluster_size: self.min_cluster_size,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelingConfig {
    pub template: String,
    pub top_k: Option<usize>,
    pub char_budget: Option<usize>,
    pub max_tokens: Option<u32>,
    pub temperature: f64,
}

impl Default for LabelingConfig {
    fn default() -> Self {
        Self { template: "gpt35".into(), top_k: None, char_budget: None, max_tokens: None, temperature: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    #[default]
    Mock,
    Replay,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub kind: BackendKind,
    /// Transcript read by the replay backend.
    pub transcript: Option<PathBuf>,
    /// Model name for the HTTP backend, also used as the artifact model id.
    pub model: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub max_in_flight: usize,
    /// Meta-sentence list file; the bundled list when unset.
    pub meta_list: Option<PathBuf>,
    pub embed: EmbedConfig,
    pub cluster: ClusterConfig,
    pub metafilter: MetaFilterConfig,
    pub labeling: LabelingConfig,
    pub framing: FramePromptConfig,
    pub framing_temperature: f64,
    pub backend: BackendConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            max_in_flight: 4,
            meta_list: None,
            embed: EmbedConfig::default(),
            cluster: ClusterConfig::default(),
            metafilter: MetaFilterConfig::default(),
            labeling: LabelingConfig::default(),
            framing: FramePromptConfig::default(),
            framing_temperature: 0.0,
            backend: BackendConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(raw: &str) -> Result<Self, PipelineError> {
        toml::from_str(raw).map_err(|e| PipelineError::Config(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self, PipelineError> {
        Self::from_toml(&read_text(path)?)
    }

    /// Meta-filter settings with the seed derived from the run seed.
    pub fn metafilter_config(&self) -> MetaFilterConfig {
        MetaFilterConfig { seed: seed::derive(self.seed, "metafilter"), ..self.metafilter.clone() }
    }

    pub fn meta_list(&self) -> Result<MetaSentenceList, PipelineError> {
        match &self.meta_list {
            Some(p) => Ok(MetaSentenceList::from_path(p)?),
            None => Ok(MetaSentenceList::bundled()),
        }
    }

    pub fn provider(&self) -> Result<Box<dyn EmbeddingProvider>, PipelineError> {
        Ok(match self.embed.provider {
            ProviderKind::Hashing => Box::new(HashingProvider::new(self.embed.dim)),
            ProviderKind::File => Box::new(FileProvider::from_path(self.embed.path.as_ref().ok_or_else(|| {
                PipelineError::Config("the file provider needs embed.path".into())
            })?)?),
            ProviderKind::Http => Box::new(HttpProvider::from_env(self.embed.model.clone())?),
        })
    }

    /// Provider for the meta list: the discussion provider, except for the
    /// file provider, which reads a separate sidecar.
    pub fn meta_provider(&self) -> Result<Box<dyn EmbeddingProvider>, PipelineError> {
        match self.embed.provider {
            ProviderKind::File => Ok(Box::new(FileProvider::from_path(self.embed.meta_path.as_ref().ok_or_else(
                || PipelineError::Config("the file provider needs embed.meta_path".into()),
            )?)?)),
            _ => self.provider(),
        }
    }

    pub fn backend(&self) -> Result<Box<dyn Backend>, PipelineError> {
        Ok(match self.backend.kind {
            BackendKind::Mock => Box::new(MockBackend::default()),
            BackendKind::Replay => Box::new(ReplayBackend::from_path(self.backend.transcript.as_ref().ok_or_else(
                || PipelineError::Config("the replay backend needs backend.transcript".into()),
            )?)?),
            BackendKind::Http => Box::new(HttpBackend::from_env(self.backend.model.clone(), RetryPolicy::default())?),
        })
    }

    /// Model id written to artifacts: the configured model name, else the
    /// backend id.
    pub fn model_id(&self, backend: &dyn Backend) -> String {
        if self.backend.model.is_empty() {
            backend.backend_id()
        } else {
            self.backend.model.clone()
        }
    }

    pub fn labeler(&self, catalog: Catalog, model_id: &str) -> Result<Labeler, PipelineError> {
        let mut l = Labeler::new(catalog, self.labeling.template.clone(), self.seed)?;
        if let Some(k) = self.labeling.top_k {
            l.top_k = k;
        }
        if let Some(b) = self.labeling.char_budget {
            l.char_budget = b;
        }
        if let Some(t) = self.labeling.max_tokens {
            l.max_tokens = t;
        }
        l.temperature = self.labeling.temperature;
        l.model_id = Some(model_id.to_string());
        Ok(l)
    }

    pub fn framer(&self, inventory: FrameInventory, catalog: Catalog, model_id: &str) -> Framer {
        let mut f = Framer::new(inventory, catalog, self.framing.clone(), self.seed);
        f.temperature = self.framing_temperature;
        f.model_id = Some(model_id.to_string());
        f
    }
}

/// Segmented sentences of one discussion, in document order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentencesArtifact {
    pub discussion_id: String,
    pub title: String,
    /// Replies dropped as deleted or moderator boilerplate.
    pub removed_replies: Vec<String>,
    pub units: Vec<SentenceUnit>,
}

impl SentencesArtifact {
    /// Units for the given sentence ids, in the given order.
    pub fn select(&self, sentence_ids: &[usize]) -> Result<Vec<SentenceUnit>, PipelineError> {
        sentence_ids
            .iter()
            .map(|&id| {
                self.units
                    .get(id)
                    .filter(|u| u.sentence_id == id)
                    .cloned()
                    .ok_or_else(|| PipelineError::Artifact(format!("unknown sentence id {id}")))
            })
            .collect()
    }
}

/// Provenance of `embeddings.txt`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingsInfo {
    pub discussion_id: String,
    pub embedding_model: String,
    pub dim: usize,
    pub count: usize,
}

impl EmbeddingsInfo {
    pub fn new(discussion_id: &str, embedding_model: &str, embeddings: &EmbeddingMatrix) -> Self {
        Self {
            discussion_id: discussion_id.to_string(),
            embedding_model: embedding_model.to_string(),
            dim: embeddings.dim(),
            count: embeddings.len(),
        }
    }
}

/// A clustering over a subset of the discussion's sentences; point `i` is
/// sentence `sentence_ids[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClustersArtifact {
    pub discussion_id: String,
    pub sentence_ids: Vec<usize>,
    #[serde(flatten)]
    pub clustering: ClusteringArtifact,
}

impl ClustersArtifact {
    fn from_run(discussion_id: &str, sentence_ids: Vec<usize>, run: ClusterRun, embedding_model: &str) -> Self {
        let mut config = run.meta;
        config.embedding_model = embedding_model.to_string();
        Self {
            discussion_id: discussion_id.to_string(),
            sentence_ids,
            clustering: ClusteringArtifact { config, clustering: rank_by_centrality(run.clustering) },
        }
    }

    /// Cluster id of every sentence id that is a clustered point.
    pub fn cluster_of_sentence(&self) -> std::collections::HashMap<usize, Option<usize>> {
        self.sentence_ids
            .iter()
            .zip(&self.clustering.clustering.assignments)
            .map(|(&s, &a)| (s, usize::try_from(a).ok()))
            .collect()
    }
}

/// Audit record of the meta filter for one discussion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterArtifact {
    pub discussion_id: String,
    pub meta_source: String,
    pub meta_size: usize,
    pub config: MetaFilterConfig,
    pub filtered_fraction: f64,
    pub verdict: MetaVerdict,
}

pub fn ingest(discussion: &Discussion, patterns: &NoisePatterns) -> SentencesArtifact {
    let cleaned = filter_noise_replies(discussion, patterns);
    let kept: std::collections::HashSet<&str> = cleaned.replies.iter().map(|r| r.id.as_str()).collect();
    SentencesArtifact {
        discussion_id: discussion.id.clone(),
        title: discussion.title.clone(),
        removed_replies: discussion.replies.iter().filter(|r| !kept.contains(r.id.as_str())).map(|r| r.id.clone()).collect(),
        units: segment_sentences(&cleaned, &RuleSegmenter),
    }
}

pub fn embed(
    units: &[SentenceUnit],
    provider: &dyn EmbeddingProvider,
    cfg: &PipelineConfig,
) -> Result<EmbeddingMatrix, PipelineError> {
    let options = EmbedOptions { batch_size: cfg.embed.batch_size, max_in_flight: cfg.max_in_flight };
    Ok(embed_sentences(units, provider, &options)?)
}

/// Embeds the meta list; row `i` belongs to `meta.sentences[i]`.
pub fn embed_meta(
    meta: &MetaSentenceList,
    provider: &dyn EmbeddingProvider,
    cfg: &PipelineConfig,
) -> Result<EmbeddingMatrix, PipelineError> {
    let units: Vec<SentenceUnit> = meta
        .sentences
        .iter()
        .enumerate()
        .map(|(i, s)| SentenceUnit { sentence_id: i, text: s.clone(), reply_id: String::new(), index_in_reply: i })
        .collect();
    embed(&units, provider, cfg)
}

/// Clusters every sentence of the discussion, without meta filtering.
pub fn cluster(
    sentences: &SentencesArtifact,
    embeddings: &EmbeddingMatrix,
    embedding_model: &str,
    cfg: &PipelineConfig,
) -> Result<ClustersArtifact, PipelineError> {
    if embeddings.len() != sentences.units.len() {
        return Err(PipelineError::Artifact(format!(
            "{} embeddings for {} sentences",
            embeddings.len(),
            sentences.units.len()
        )));
    }
    let run = cfg.cluster.pipeline(cfg.seed).run(embeddings, embeddings.len())?;
    let ids = sentences.units.iter().map(|u| u.sentence_id).collect();
    Ok(ClustersArtifact::from_run(&sentences.discussion_id, ids, run, embedding_model))
}

/// Meta filtering followed by clustering of the kept sentences.
pub fn filter(
    sentences: &SentencesArtifact,
    embeddings: &EmbeddingMatrix,
    meta: &MetaSentenceList,
    meta_embeddings: &EmbeddingMatrix,
    embedding_model: &str,
    cfg: &PipelineConfig,
) -> Result<(FilterArtifact, ClustersArtifact), PipelineError> {
    let meta_cfg = cfg.metafilter_config();
    let outcome = filter_discussion(
        &sentences.units,
        embeddings,
        meta,
        meta_embeddings,
        &meta_cfg,
        &cfg.cluster.pipeline(cfg.seed),
    )?;
    let ids = outcome.kept_units.iter().map(|u| u.sentence_id).collect();
    let clusters = ClustersArtifact::from_run(&sentences.discussion_id, ids, outcome.clustering, embedding_model);
    let audit = FilterArtifact {
        discussion_id: sentences.discussion_id.clone(),
        meta_source: meta.source.clone(),
        meta_size: meta.len(),
        config: meta_cfg,
        filtered_fraction: outcome.verdict.filtered_fraction(),
        verdict: outcome.verdict,
    };
    Ok((audit, clusters))
}

pub fn label(
    sentences: &SentencesArtifact,
    clusters: &ClustersArtifact,
    labeler: &Labeler,
    backend: &dyn Backend,
    max_in_flight: usize,
) -> Result<LabelsArtifact, PipelineError> {
    let units = sentences.select(&clusters.sentence_ids)?;
    let labels = labeler.label_all(&clusters.clustering.clustering, &units, backend, max_in_flight)?;
    Ok(LabelsArtifact {
        discussion_id: sentences.discussion_id.clone(),
        model_id: labeler.model_id.clone().unwrap_or_else(|| backend.backend_id()),
        template_id: labeler.template_id.clone(),
        labels,
    })
}

/// Labels whose answers never parse are recorded as failures; other errors
/// abort the stage.
pub fn frame(
    labels: &LabelsArtifact,
    framer: &Framer,
    backend: &dyn Backend,
    max_in_flight: usize,
) -> Result<FramesArtifact, PipelineError> {
    let mut assignments = Vec::new();
    let mut failures = Vec::new();
    for (label, result) in labels.labels.iter().zip(framer.assign_all(&labels.labels, backend, max_in_flight)) {
        match result {
            Ok(a) => assignments.push(a),
            Err(FramingError::FrameParseFailure { raw }) => {
                log::warn!("cluster {}: no frame could be parsed", label.cluster_id);
                failures.push(FrameFailure { cluster_id: label.cluster_id, raw_output: raw });
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(FramesArtifact {
        discussion_id: labels.discussion_id.clone(),
        model_id: framer.model_id.clone().unwrap_or_else(|| backend.backend_id()),
        config: framer.config.clone(),
        assignments,
        failures,
    })
}

/// Clusters whose framing failed are left out.
pub fn summarize(
    labels: &LabelsArtifact,
    frames: &FramesArtifact,
    clusters: &ClustersArtifact,
) -> Result<IndicativeSummary, PipelineError> {
    let failed: std::collections::HashSet<usize> = frames.failures.iter().map(|f| f.cluster_id).collect();
    let kept: Vec<_> = labels.labels.iter().filter(|l| !failed.contains(&l.cluster_id)).cloned().collect();
    Ok(assemble(&labels.discussion_id, &labels.model_id, &kept, &frames.assignments, &clusters.clustering.clustering)?)
}

/// Everything one run produces for one discussion and one model.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub sentences: SentencesArtifact,
    pub embeddings: EmbeddingMatrix,
    pub filter: FilterArtifact,
    pub clusters: ClustersArtifact,
    pub labels: LabelsArtifact,
    pub frames: FramesArtifact,
    pub summary: IndicativeSummary,
}

/// Runs every stage with the providers and backend named in `cfg`.
pub fn run(discussion: &Discussion, cfg: &PipelineConfig) -> Result<RunArtifacts, PipelineError> {
    let backend = cfg.backend()?;
    run_with(discussion, cfg, cfg.provider()?.as_ref(), cfg.meta_provider()?.as_ref(), backend.as_ref())
}

pub fn run_with(
    discussion: &Discussion,
    cfg: &PipelineConfig,
    provider: &dyn EmbeddingProvider,
    meta_provider: &dyn EmbeddingProvider,
    backend: &dyn Backend,
) -> Result<RunArtifacts, PipelineError> {
    let sentences = ingest(discussion, &NoisePatterns::bundled());
    let embeddings = embed(&sentences.units, provider, cfg)?;
    let meta = cfg.meta_list()?;
    let meta_embeddings = embed_meta(&meta, meta_provider, cfg)?;
    let (filter, clusters) = filter(&sentences, &embeddings, &meta, &meta_embeddings, provider.model_id(), cfg)?;
    let model_id = cfg.model_id(backend);
    let catalog = Catalog::bundled();
    let labels = label(&sentences, &clusters, &cfg.labeler(catalog.clone(), &model_id)?, backend, cfg.max_in_flight)?;
    let frames = frame(&labels, &cfg.framer(FrameInventory::bundled(), catalog, &model_id), backend, cfg.max_in_flight)?;
    let summary = summarize(&labels, &frames, &clusters)?;
    Ok(RunArtifacts { sentences, embeddings, filter, clusters, labels, frames, summary })
}

/// File names inside an artifact directory.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

/// Directory-safe form of a model id.
pub fn model_dir_name(model_id: &str) -> String {
    model_id.chars().map(|c| if c.is_ascii_alphanumeric() || "._-".contains(c) { c } else { '_' }).collect()
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn discussion(&self, id: &str) -> PathBuf {
        self.root.join(id)
    }

    pub fn sentences(&self, id: &str) -> PathBuf {
        self.discussion(id).join("sentences.json")
    }

    pub fn embeddings(&self, id: &str) -> PathBuf {
        self.discussion(id).join("embeddings.txt")
    }

    pub fn embeddings_info(&self, id: &str) -> PathBuf {
        self.discussion(id).join("embeddings.json")
    }

    pub fn filter(&self, id: &str) -> PathBuf {
        self.discussion(id).join("filter.json")
    }

    pub fn clusters(&self, id: &str) -> PathBuf {
        self.discussion(id).join("clusters.json")
    }

    pub fn models(&self, id: &str) -> PathBuf {
        self.discussion(id).join("models")
    }

    pub fn model(&self, id: &str, model_id: &str) -> PathBuf {
        self.models(id).join(model_dir_name(model_id))
    }
}

impl RunArtifacts {
    pub fn write(&self, layout: &Layout) -> Result<(), PipelineError> {
        let id = &self.sentences.discussion_id;
        write_json(&layout.sentences(id), &self.sentences)?;
        write_text(&layout.embeddings(id), &crate::embed::write_sidecar(&self.embeddings))?;
        let model = &self.clusters.clustering.config.embedding_model;
        write_json(&layout.embeddings_info(id), &EmbeddingsInfo::new(id, model, &self.embeddings))?;
        write_json(&layout.filter(id), &self.filter)?;
        write_json(&layout.clusters(id), &self.clusters)?;
        let model = layout.model(id, &self.labels.model_id);
        write_json(&model.join("labels.json"), &self.labels)?;
        write_json(&model.join("frames.json"), &self.frames)?;
        write_text(&model.join("summary.json"), &self.summary.to_json())?;
        write_text(&model.join("summary.md"), &self.summary.to_markdown())?;
        Ok(())
    }
}

pub fn read_text(path: &Path) -> Result<String, PipelineError> {
    std::fs::read_to_string(path).map_err(|source| PipelineError::Io { path: path.to_path_buf(), source })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), PipelineError> {
    let io = |source| PipelineError::Io { path: path.to_path_buf(), source };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io)?;
    }
    std::fs::write(path, text).map_err(io)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, PipelineError> {
    serde_json::from_str(&read_text(path)?).map_err(|source| PipelineError::Json { path: path.to_path_buf(), source })
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(value).expect("artifacts serialize");
    text.push('\n');
    write_text(path, &text)
}

/// Reads an embedding sidecar whose row ids must be `0..n` in order.
pub fn read_embeddings(path: &Path) -> Result<EmbeddingMatrix, PipelineError> {
    let (dim, rows) = crate::embed::read_sidecar(&read_text(path)?)?;
    if let Some((pos, (id, _))) = rows.iter().enumerate().find(|(pos, (id, _))| pos != id) {
        return Err(PipelineError::Artifact(format!("{}: row {pos} has sentence id {id}", path.display())));
    }
    if rows.is_empty() {
        return Ok(EmbeddingMatrix::empty(dim));
    }
    Ok(EmbeddingMatrix::from_rows(rows.into_iter().map(|(_, v)| v).collect())?)
}
