//! Cluster labeling: the most central member sentences of a cluster are
//! sent to a model, and its answer is cleaned into a one-line label.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::{Cluster, Clustering};
use crate::ingest::SentenceUnit;
use crate::llm::{self, Backend, Catalog, CompletionRequest, LlmError, Task};

#[derive(Debug, Error)]
pub enum LabelingError {
    #[error("cluster {0} has no member sentences")]
    EmptyCluster(usize),
    #[error("cluster {0}: model returned no usable label")]
    EmptyCompletion(usize),
    #[error("cluster {cluster_id} references point {point} outside the {len} sentence units")]
    MemberOutOfRange { cluster_id: usize, point: usize, len: usize },
    #[error(transparent)]
    Llm(#[from] LlmError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterLabel {
    pub cluster_id: usize,
    pub text: String,
    pub model_id: String,
    /// The model answer went on past its first line.
    #[serde(default)]
    pub truncated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelsArtifact {
    pub discussion_id: String,
    pub model_id: String,
    pub template_id: String,
    pub labels: Vec<ClusterLabel>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssembledText {
    pub text: String,
    pub sentences: usize,
    /// The first sentence alone is longer than the budget.
    pub over_budget: bool,
}

/// Newline-joined text of the `top_k` first members (members are expected
/// in centrality order), cut after the last whole sentence that fits in
/// `char_budget` characters. The first sentence is always kept.
pub fn assemble_cluster_text(
    cluster: &Cluster,
    units: &[SentenceUnit],
    top_k: usize,
    char_budget: usize,
) -> Result<AssembledText, LabelingError> {
    let mut text = String::new();
    let mut used = 0usize;
    let mut sentences = 0;
    for &point in cluster.member_ids.iter().take(top_k.max(1)) {
        let unit = units.get(point).ok_or(LabelingError::MemberOutOfRange {
            cluster_id: cluster.cluster_id,
            point,
            len: units.len(),
        })?;
        let len = unit.text.chars().count();
        let extra = if sentences == 0 { len } else { len + 1 };
        if sentences > 0 && used + extra > char_budget {
            break;
        }
        if sentences > 0 {
            text.push('\n');
        }
        text.push_str(&unit.text);
        used += extra;
        sentences += 1;
    }
    if sentences == 0 {
        return Err(LabelingError::EmptyCluster(cluster.cluster_id));
    }
    Ok(AssembledText { text, sentences, over_budget: used > char_budget })
}

const QUOTES: &[char] = &['"', '\'', '\u{201c}', '\u{201d}', '\u{2018}', '\u{2019}', '`'];

/// Trims, keeps the first line, drops wrapping quotes and collapses
/// whitespace. Returns the label and whether later lines were dropped.
pub fn clean_completion(raw: &str) -> (String, bool) {
    let trimmed = raw.trim();
    let (first, rest) = trimmed.split_once('\n').unwrap_or((trimmed, ""));
    let truncated = !rest.trim().is_empty();
    let mut line = first.trim();
    loop {
        let next = line.trim_matches(QUOTES).trim();
        if next == line {
            break;
        }
        line = next;
    }
    (line.split_whitespace().collect::<Vec<_>>().join(" "), truncated)
}

/// First `limit` whitespace-delimited tokens joined by single spaces; text
/// with at most `limit` tokens comes back unchanged.
pub fn truncate_tokens(text: &str, limit: usize) -> String {
    let limit = limit.max(1);
    let tokens: Vec<&str> = text.split_whitespace().collect();
    if tokens.len() <= limit {
        text.to_string()
    } else {
        tokens[..limit].join(" ")
    }
}

/// Labeling settings shared by every cluster of a run.
#[derive(Debug, Clone)]
pub struct Labeler {
    pub catalog: Catalog,
    pub template_id: String,
    pub top_k: usize,
    pub char_budget: usize,
    pub seed: u64,
    pub temperature: f64,
    pub max_tokens: u32,
    pub model_id: Option<String>,
}

impl Labeler {
    /// Uses the catalog's context sizing for the template.
    pub fn new(catalog: Catalog, template_id: impl Into<String>, seed: u64) -> Result<Self, LabelingError> {
        let template_id = template_id.into();
        let template = catalog.template(&template_id)?;
        let (top_k, char_budget) = (catalog.top_k(template), catalog.char_budget(template));
        let max_tokens = catalog.max_tokens(Task::Labeling);
        Ok(Self { catalog, template_id, top_k, char_budget, seed, temperature: 0.0, max_tokens, model_id: None })
    }

    pub fn request(&self, cluster_text: &str) -> Result<CompletionRequest, LabelingError> {
        let template = self.catalog.template(&self.template_id)?;
        let instruction = match &template.instruction {
            Some(id) => self.catalog.instruction(id)?.body.clone(),
            None => String::new(),
        };
        let prompt = llm::render(
            template,
            &llm::bindings([("text", cluster_text), ("input", cluster_text), ("instruction", instruction.as_str())]),
        )?;
        Ok(CompletionRequest {
            prompt,
            max_tokens: self.max_tokens,
            temperature: self.temperature,
            seed: self.seed,
            stop_sequences: template.stop_sequences.clone(),
            task: Task::Labeling,
            input: cluster_text.to_string(),
        })
    }

    pub fn label_text(
        &self,
        cluster_id: usize,
        cluster_text: &str,
        backend: &dyn Backend,
    ) -> Result<ClusterLabel, LabelingError> {
        if cluster_text.trim().is_empty() {
            return Err(LabelingError::EmptyCluster(cluster_id));
        }
        let result = llm::complete(&self.request(cluster_text)?, backend)?;
        label_from_completion(cluster_id, &result.text, self.model_id.clone().unwrap_or_else(|| backend.backend_id()))
    }

    /// Labels every cluster; labels keep cluster order.
    pub fn label_all(
        &self,
        clustering: &Clustering,
        units: &[SentenceUnit],
        backend: &dyn Backend,
        max_in_flight: usize,
    ) -> Result<Vec<ClusterLabel>, LabelingError> {
        let texts = clustering
            .clusters
            .iter()
            .map(|c| assemble_cluster_text(c, units, self.top_k, self.char_budget).map(|a| (c.cluster_id, a.text)))
            .collect::<Result<Vec<_>, _>>()?;
        crate::pool::map_bounded(&texts, max_in_flight, |(id, text)| self.label_text(*id, text, backend))
            .into_iter()
            .collect()
    }
}

pub fn label_from_completion(cluster_id: usize, raw: &str, model_id: String) -> Result<ClusterLabel, LabelingError> {
    let (text, truncated) = clean_completion(raw);
    if text.is_empty() {
        return Err(LabelingError::EmptyCompletion(cluster_id));
    }
    Ok(ClusterLabel { cluster_id, text, model_id, truncated })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn units(texts: &[&str]) -> Vec<SentenceUnit> {
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| SentenceUnit { sentence_id: i, text: t.to_string(), reply_id: "r".into(), index_in_reply: i })
            .collect()
    }

    fn cluster(members: Vec<usize>) -> Cluster {
        Cluster { cluster_id: 0, member_ids: members, centroid: vec![] }
    }

    #[test]
    fn cleaning_keeps_the_first_line_without_quotes() {
        assert_eq!(clean_completion("\"Debate about shoe sizes\"\nExtra"), ("Debate about shoe sizes".into(), true));
        assert_eq!(clean_completion("  \u{201c}Tax  policy\u{201d} "), ("Tax policy".into(), false));
        assert_eq!(clean_completion("\n\nLate start\n"), ("Late start".into(), false));
    }

    #[test]
    fn truncation_examples() {
        let twenty: Vec<String> = (0..20).map(|i| format!("w{i}")).collect();
        let t = truncate_tokens(&twenty.join(" "), 15);
        assert_eq!(t.split(' ').count(), 15);
        assert_eq!(truncate_tokens(&t, 15), t);
        assert_eq!(truncate_tokens("one two three", 15), "one two three");
        assert_eq!(truncate_tokens("a  b   c", 2), "a b");
    }

    #[test]
    fn assembly_respects_order_and_budget() {
        let u = units(&["First one.", "Second.", "Third sentence here."]);
        let a = assemble_cluster_text(&cluster(vec![2, 0, 1]), &u, 20, 6000).unwrap();
        assert_eq!(a.text, "Third sentence here.\nFirst one.\nSecond.");
        let a = assemble_cluster_text(&cluster(vec![2, 0, 1]), &u, 20, 31).unwrap();
        assert_eq!(a.text, "Third sentence here.\nFirst one.");
        let a = assemble_cluster_text(&cluster(vec![2, 0]), &u, 20, 5).unwrap();
        assert_eq!((a.sentences, a.over_budget), (1, true));
    }
}
