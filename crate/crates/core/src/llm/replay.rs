use std::collections::HashMap;
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{Backend, CompletionRequest, CompletionResult, LlmError};

/// One transcript line: `{"prompt_sha256": ..., "response": ...}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub prompt_sha256: String,
    pub response: String,
}

/// Serves recorded responses keyed by prompt hash.
#[derive(Debug, Clone, Default)]
pub struct ReplayBackend {
    entries: HashMap<String, String>,
}

impl ReplayBackend {
    pub fn from_entries(entries: impl IntoIterator<Item = TranscriptEntry>) -> Self {
        Self { entries: entries.into_iter().map(|e| (e.prompt_sha256, e.response)).collect() }
    }

    /// Later lines win when a hash repeats.
    pub fn from_jsonl(raw: &str) -> Result<Self, LlmError> {
        let mut entries = Vec::new();
        for (i, line) in raw.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry: TranscriptEntry = serde_json::from_str(line)
                .map_err(|e| LlmError::Transcript { line: i + 1, message: e.to_string() })?;
            entries.push(entry);
        }
        Ok(Self::from_entries(entries))
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, LlmError> {
        Self::from_jsonl(&std::fs::read_to_string(path)?)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl Backend for ReplayBackend {
    fn backend_id(&self) -> String {
        "replay".into()
    }

    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, LlmError> {
        let key = request.prompt.sha256();
        let text = self.entries.get(&key).cloned().ok_or(LlmError::TranscriptMiss(key))?;
        Ok(CompletionResult {
            text,
            backend_id: self.backend_id(),
            latency: Duration::ZERO,
            prompt_tokens: None,
            completion_tokens: None,
        })
    }
}

/// Wraps a backend and keeps a transcript of every successful exchange.
pub struct RecordingBackend<'a> {
    inner: &'a dyn Backend,
    log: Mutex<Vec<TranscriptEntry>>,
}

impl<'a> RecordingBackend<'a> {
    pub fn new(inner: &'a dyn Backend) -> Self {
        Self { inner, log: Mutex::new(Vec::new()) }
    }

    /// Entries sorted by hash, one JSON object per line.
    pub fn to_jsonl(&self) -> String {
        let mut entries = self.log.lock().expect("transcript lock").clone();
        entries.sort_by(|a, b| a.prompt_sha256.cmp(&b.prompt_sha256));
        entries.dedup_by(|a, b| a.prompt_sha256 == b.prompt_sha256);
        entries
            .iter()
            .map(|e| serde_json::to_string(e).expect("entry serializes") + "\n")
            .collect()
    }
}

impl Backend for RecordingBackend<'_> {
    fn backend_id(&self) -> String {
        self.inner.backend_id()
    }

    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, LlmError> {
        let result = self.inner.complete(request)?;
        self.log.lock().expect("transcript lock").push(TranscriptEntry {
            prompt_sha256: request.prompt.sha256(),
            response: result.text.clone(),
        });
        Ok(result)
    }
}
