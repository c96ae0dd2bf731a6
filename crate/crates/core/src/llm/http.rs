use std::time::Instant;

use serde_json::{json, Value};

use super::{Backend, CompletionRequest, CompletionResult, LlmError, Prompt};
use crate::http::{HttpError, JsonClient, RetryPolicy};

/// OpenAI-compatible backend: text prompts go to `{base}/completions`,
/// chat prompts to `{base}/chat/completions`.
pub struct HttpBackend {
    base: String,
    model: String,
    client: JsonClient,
}

impl HttpBackend {
    pub fn new(base: impl Into<String>, model: impl Into<String>, api_key: Option<String>, retry: RetryPolicy) -> Self {
        Self {
            base: base.into().trim_end_matches('/').to_string(),
            model: model.into(),
            client: JsonClient::new(retry).with_bearer(api_key),
        }
    }

    /// Reads `LLM_API_BASE` (required) and `LLM_API_KEY` (optional).
    pub fn from_env(model: impl Into<String>, retry: RetryPolicy) -> Result<Self, LlmError> {
        let base = std::env::var("LLM_API_BASE")
            .map_err(|_| LlmError::BackendUnavailable("LLM_API_BASE is not set".into()))?;
        let key = std::env::var("LLM_API_KEY").ok().filter(|k| !k.is_empty());
        Ok(Self::new(base, model, key, retry))
    }

    fn body(&self, request: &CompletionRequest) -> (String, Value) {
        let mut body = json!({
            "model": self.model,
            "max_tokens": request.max_tokens,
            "temperature": request.temperature,
            "seed": request.seed,
        });
        if !request.stop_sequences.is_empty() {
            body["stop"] = json!(request.stop_sequences);
        }
        match &request.prompt {
            Prompt::Text(text) => {
                body["prompt"] = json!(text);
                (format!("{}/completions", self.base), body)
            }
            Prompt::Chat(turns) => {
                body["messages"] = json!(turns);
                (format!("{}/chat/completions", self.base), body)
            }
        }
    }
}

fn map_http(err: HttpError) -> LlmError {
    match err {
        HttpError::RateLimited { attempts } => LlmError::RateLimited { attempts },
        other => LlmError::BackendUnavailable(other.to_string()),
    }
}

fn response_text(v: &Value) -> Option<String> {
    let choice = v.get("choices")?.get(0)?;
    choice
        .get("message")
        .and_then(|m| m.get("content"))
        .or_else(|| choice.get("text"))
        .and_then(Value::as_str)
        .map(String::from)
}

impl Backend for HttpBackend {
    fn backend_id(&self) -> String {
        format!("http:{}", self.model)
    }

    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, LlmError> {
        let (url, body) = self.body(request);
        let start = Instant::now();
        let v = self.client.post_json(&url, &body).map_err(map_http)?;
        let text = response_text(&v)
            .ok_or_else(|| LlmError::BackendUnavailable(format!("unexpected response shape from {url}")))?;
        let usage = |k: &str| v.get("usage").and_then(|u| u.get(k)).and_then(Value::as_u64);
        Ok(CompletionResult {
            text,
            backend_id: self.backend_id(),
            latency: start.elapsed(),
            prompt_tokens: usage("prompt_tokens"),
            completion_tokens: usage("completion_tokens"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{ChatTurn, Task};

    fn request(prompt: Prompt) -> CompletionRequest {
        CompletionRequest {
            prompt,
            max_tokens: 64,
            temperature: 0.0,
            seed: 7,
            stop_sequences: vec!["\"".into()],
            task: Task::Labeling,
            input: String::new(),
        }
    }

    #[test]
    fn text_and_chat_prompts_pick_their_endpoint() {
        let b = HttpBackend::new("http://x/v1/", "m", None, RetryPolicy::default());
        let (url, body) = b.body(&request(Prompt::Text("hi".into())));
        assert_eq!(url, "http://x/v1/completions");
        assert_eq!(body["prompt"], "hi");
        assert_eq!(body["stop"][0], "\"");
        let chat = Prompt::Chat(vec![ChatTurn { role: "system".into(), content: "s".into() }]);
        let (url, body) = b.body(&request(chat));
        assert_eq!(url, "http://x/v1/chat/completions");
        assert_eq!(body["messages"][0]["role"], "system");
    }

    #[test]
    fn both_response_shapes_are_read() {
        assert_eq!(response_text(&json!({"choices":[{"message":{"content":"a"}}]})).as_deref(), Some("a"));
        assert_eq!(response_text(&json!({"choices":[{"text":"b"}]})).as_deref(), Some("b"));
        assert_eq!(response_text(&json!({"error":"x"})), None);
    }
}
