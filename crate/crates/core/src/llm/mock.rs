use std::time::Duration;

use super::{Backend, CompletionRequest, CompletionResult, LlmError, Task};
use crate::framing::FrameInventory;
use crate::seed;

/// Network-free backend. Labeling prompts get `LABEL(<first five input
/// words>)`; framing prompts get a JSON list of three consecutive frame
/// names, starting at a position fixed by the prompt hash and seed.
#[derive(Debug, Clone)]
pub struct MockBackend {
    frame_names: Vec<String>,
}

impl MockBackend {
    pub fn new(frame_names: Vec<String>) -> Self {
        Self { frame_names }
    }

    fn frames_for(&self, request: &CompletionRequest) -> String {
        let n = self.frame_names.len();
        if n == 0 {
            return "[]".into();
        }
        let start = seed::derive(request.seed, &request.prompt.sha256()) as usize % n;
        let picked: Vec<&str> = (0..3.min(n)).map(|i| self.frame_names[(start + i) % n].as_str()).collect();
        serde_json::to_string(&picked).expect("strings serialize")
    }
}

impl Default for MockBackend {
    fn default() -> Self {
        let inventory = FrameInventory::bundled();
        Self::new(inventory.prompt_frames().map(|f| f.canonical_name.clone()).collect())
    }
}

impl Backend for MockBackend {
    fn backend_id(&self) -> String {
        "mock".into()
    }

    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, LlmError> {
        let text = match request.task {
            Task::Labeling => {
                let words: Vec<&str> = request.input.split_whitespace().take(5).collect();
                format!("LABEL({})", words.join(" "))
            }
            Task::Framing => self.frames_for(request),
        };
        Ok(CompletionResult {
            text,
            backend_id: self.backend_id(),
            latency: Duration::ZERO,
            prompt_tokens: None,
            completion_tokens: None,
        })
    }
}
