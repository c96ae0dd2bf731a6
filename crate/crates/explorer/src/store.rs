//! In-memory view of an artifact directory, loaded once at startup.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;
use threadtoc::pipeline::{read_json, ClustersArtifact, Layout, PipelineError, SentencesArtifact};
use threadtoc::summary::IndicativeSummary;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Artifact(#[from] PipelineError),
    #[error("{path}: {source}")]
    Summary { path: PathBuf, source: threadtoc::summary::SummaryError },
    #[error("{0}: {1}")]
    Inconsistent(String, String),
    #[error("no discussion artifacts under {0}")]
    Empty(PathBuf),
}

/// One sentence with the cluster it landed in, if any.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SentenceView {
    pub sentence_id: usize,
    pub text: String,
    pub reply_id: String,
    pub index_in_reply: usize,
    pub cluster_id: Option<usize>,
    pub lambda: Option<f64>,
    /// Removed by the meta filter before clustering.
    pub omitted: bool,
}

#[derive(Debug, Clone)]
pub struct DiscussionData {
    pub sentences: SentencesArtifact,
    pub clusters: ClustersArtifact,
    /// Keyed by model id.
    pub summaries: BTreeMap<String, IndicativeSummary>,
    /// Hash over the artifact files; stable across restarts.
    pub digest: String,
    views: Vec<SentenceView>,
    cluster_members: HashMap<usize, Vec<usize>>,
}

impl DiscussionData {
    pub fn sentence(&self, sentence_id: usize) -> Option<&SentenceView> {
        self.views.get(sentence_id)
    }

    pub fn sentence_count(&self) -> usize {
        self.views.len()
    }

    /// Sentence ids of a cluster, most central first.
    pub fn cluster_members(&self, cluster_id: usize) -> Option<&[usize]> {
        self.cluster_members.get(&cluster_id).map(Vec::as_slice)
    }

    /// `window` sentences on each side of `sentence_id`, in document order.
    pub fn context(&self, sentence_id: usize, window: usize) -> Option<&[SentenceView]> {
        if sentence_id >= self.views.len() {
            return None;
        }
        let lo = sentence_id.saturating_sub(window);
        let hi = sentence_id.saturating_add(window).min(self.views.len() - 1);
        Some(&self.views[lo..=hi])
    }

    fn build(
        sentences: SentencesArtifact,
        clusters: ClustersArtifact,
        summaries: BTreeMap<String, IndicativeSummary>,
        digest: String,
    ) -> Result<Self, StoreError> {
        let id = sentences.discussion_id.clone();
        let bad = |m: String| StoreError::Inconsistent(id.clone(), m);
        if sentences.units.iter().enumerate().any(|(i, u)| u.sentence_id != i) {
            return Err(bad("sentence ids are not dense".into()));
        }
        let clustering = &clusters.clustering.clustering;
        if clusters.sentence_ids.len() != clustering.assignments.len() {
            return Err(bad("clustered ids and assignments differ in length".into()));
        }
        let mut views: Vec<SentenceView> = sentences
            .units
            .iter()
            .map(|u| SentenceView {
                sentence_id: u.sentence_id,
                text: u.text.clone(),
                reply_id: u.reply_id.clone(),
                index_in_reply: u.index_in_reply,
                cluster_id: None,
                lambda: None,
                omitted: true,
            })
            .collect();
        for (point, &sid) in clusters.sentence_ids.iter().enumerate() {
            let view = views.get_mut(sid).ok_or_else(|| bad(format!("unknown sentence id {sid}")))?;
            view.omitted = false;
            view.cluster_id = usize::try_from(clustering.assignments[point]).ok();
            view.lambda = view.cluster_id.map(|_| clustering.lambda[point]);
        }
        let mut cluster_members = HashMap::new();
        for c in &clustering.clusters {
            let members = c
                .member_ids
                .iter()
                .map(|&p| clusters.sentence_ids.get(p).copied().ok_or_else(|| bad(format!("point {p} out of range"))))
                .collect::<Result<Vec<_>, _>>()?;
            cluster_members.insert(c.cluster_id, members);
        }
        for s in summaries.values() {
            if let Some(e) = s.sections.iter().flat_map(|s| &s.entries).find(|e| !cluster_members.contains_key(&e.cluster_id)) {
                return Err(bad(format!("summary of {} names unknown cluster {}", s.model_id, e.cluster_id)));
            }
        }
        Ok(Self { sentences, clusters, summaries, digest, views, cluster_members })
    }
}

#[derive(Debug, Clone, Default)]
pub struct ArtifactStore {
    pub discussions: BTreeMap<String, DiscussionData>,
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, StoreError> {
    std::fs::read(path).map_err(|source| StoreError::Io { path: path.to_path_buf(), source })
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>, StoreError> {
    let io = |source| StoreError::Io { path: dir.to_path_buf(), source };
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        if path.is_dir() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

impl ArtifactStore {
    /// Loads every discussion directory that has sentences and clusters.
    /// Directories without them are skipped.
    pub fn load(root: &Path) -> Result<Self, StoreError> {
        let layout = Layout::new(root);
        let mut discussions = BTreeMap::new();
        for dir in sorted_entries(root)? {
            let id = dir.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
            if !layout.sentences(&id).is_file() || !layout.clusters(&id).is_file() {
                log::debug!("skipping {}", dir.display());
                continue;
            }
            let mut hasher = Sha256::new();
            hasher.update(read_bytes(&layout.sentences(&id))?);
            hasher.update(read_bytes(&layout.clusters(&id))?);
            let sentences: SentencesArtifact = read_json(&layout.sentences(&id))?;
            let clusters: ClustersArtifact = read_json(&layout.clusters(&id))?;
            let mut summaries = BTreeMap::new();
            if layout.models(&id).is_dir() {
                for model_dir in sorted_entries(&layout.models(&id))? {
                    let path = model_dir.join("summary.json");
                    if !path.is_file() {
                        continue;
                    }
                    let raw = read_bytes(&path)?;
                    hasher.update(&raw);
                    let summary = IndicativeSummary::from_json(&String::from_utf8_lossy(&raw))
                        .map_err(|source| StoreError::Summary { path: path.clone(), source })?;
                    summaries.insert(summary.model_id.clone(), summary);
                }
            }
            if sentences.discussion_id != id || clusters.discussion_id != id {
                return Err(StoreError::Inconsistent(id, "artifact discussion ids differ from the directory".into()));
            }
            let digest = hex::encode(hasher.finalize());
            discussions.insert(id, DiscussionData::build(sentences, clusters, summaries, digest)?);
        }
        if discussions.is_empty() {
            return Err(StoreError::Empty(root.to_path_buf()));
        }
        Ok(Self { discussions })
    }
}

/// Lowercase ASCII words joined by `-`, with `&` spelled out:
/// "Health & Safety" → "health-and-safety".
pub fn frame_slug(frame: &str) -> String {
    frame
        .replace('&', " and ")
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_ascii_lowercase)
        .collect::<Vec<_>>()
        .join("-")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slugs() {
        assert_eq!(frame_slug("Health & Safety"), "health-and-safety");
        assert_eq!(frame_slug("Policy Prescription & Evaluation"), "policy-prescription-and-evaluation");
        assert_eq!(frame_slug("Crime and Punishment"), frame_slug("Crime & Punishment"));
        assert_eq!(frame_slug("Economic"), "economic");
    }
}
