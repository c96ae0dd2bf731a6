//! Discussion parsing, noise-reply removal and sentence segmentation.
//!
//! A discussion file holds one thread as JSON:
//! `{"id","title","op_body","replies":[{"id","author","body","parent_id","created_utc"}]}`.
//! Reply bodies are kept verbatim, including quoted (`> ...`) lines.

mod noise;
mod segment;

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use noise::{filter_noise_replies, NoisePatterns};
pub use segment::{RuleSegmenter, SentenceSegmenter};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("failed to read discussion file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed discussion JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed noise pattern file: {0}")]
    Patterns(String),
    #[error("discussion title is empty")]
    EmptyTitle,
    #[error("duplicate reply id `{0}`")]
    DuplicateReply(String),
    #[error("reply `{reply}` references unknown parent `{parent}`")]
    UnknownParent { reply: String, parent: String },
    #[error("reply graph contains a cycle through `{0}`")]
    Cycle(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reply {
    pub id: String,
    #[serde(default)]
    pub author: String,
    pub body: String,
    #[serde(default)]
    pub parent_id: Option<String>,
    #[serde(default)]
    pub created_utc: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Discussion {
    pub id: String,
    pub title: String,
    #[serde(default)]
    pub op_body: String,
    #[serde(default)]
    pub replies: Vec<Reply>,
}

impl Discussion {
    /// Reads and validates a discussion file.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, IngestError> {
        let raw = std::fs::read_to_string(path)?;
        Self::from_json(&raw)
    }

    pub fn from_json(raw: &str) -> Result<Self, IngestError> {
        let discussion: Discussion = serde_json::from_str(raw)?;
        discussion.validate()?;
        Ok(discussion)
    }

    /// Checks the structural invariants: non-empty title, unique reply ids,
    /// parents that resolve to a reply or the root, and an acyclic reply graph.
    pub fn validate(&self) -> Result<(), IngestError> {
        if self.title.trim().is_empty() {
            return Err(IngestError::EmptyTitle);
        }
        let mut ids = HashSet::with_capacity(self.replies.len() + 1);
        ids.insert(self.id.as_str());
        for reply in &self.replies {
            if !ids.insert(reply.id.as_str()) {
                return Err(IngestError::DuplicateReply(reply.id.clone()));
            }
        }
        let parents: HashMap<&str, &str> = self
            .replies
            .iter()
            .filter_map(|r| r.parent_id.as_deref().map(|p| (r.id.as_str(), p)))
            .collect();
        for (reply, parent) in &parents {
            if !ids.contains(parent) {
                return Err(IngestError::UnknownParent {
                    reply: (*reply).to_string(),
                    parent: (*parent).to_string(),
                });
            }
        }
        // Walk each parent chain; a chain longer than the reply count loops.
        for reply in &self.replies {
            let mut current = reply.id.as_str();
            let mut steps = 0usize;
            while let Some(parent) = parents.get(current) {
                steps += 1;
                if steps > self.replies.len() {
                    return Err(IngestError::Cycle(reply.id.clone()));
                }
                current = parent;
            }
        }
        Ok(())
    }
}

/// One sentence of a discussion together with where it came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceUnit {
    pub sentence_id: usize,
    pub text: String,
    /// Reply id, or the discussion id for sentences of the opening post.
    pub reply_id: String,
    pub index_in_reply: usize,
}

/// Splits the opening post and every reply into sentence units.
///
/// Sentence ids are dense and follow document order: opening post first,
/// then replies in the order they appear in the file.
pub fn segment_sentences(
    discussion: &Discussion,
    segmenter: &dyn SentenceSegmenter,
) -> Vec<SentenceUnit> {
    let sources = std::iter::once((discussion.id.as_str(), discussion.op_body.as_str())).chain(
        discussion
            .replies
            .iter()
            .map(|r| (r.id.as_str(), r.body.as_str())),
    );

    let mut units = Vec::new();
    for (reply_id, body) in sources {
        let sentences = segmenter
            .split(body)
            .into_iter()
            .map(str::trim)
            .filter(|s| !s.is_empty());
        for (index_in_reply, text) in sentences.enumerate() {
            units.push(SentenceUnit {
                sentence_id: units.len(),
                text: text.to_string(),
                reply_id: reply_id.to_string(),
                index_in_reply,
            });
        }
    }
    units
}
