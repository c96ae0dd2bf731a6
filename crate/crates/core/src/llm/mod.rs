//! Prompt-completion gateway: template rendering, the bundled template
//! catalog, and interchangeable completion backends (deterministic mock,
//! transcript replay, OpenAI-compatible HTTP).

mod catalog;
mod http;
mod mock;
mod replay;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use catalog::{Catalog, CatalogDefaults, Instruction};
pub use http::HttpBackend;
pub use mock::MockBackend;
pub use replay::{RecordingBackend, ReplayBackend, TranscriptEntry};

use crate::pool;

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("no binding for placeholder {{{0}}}")]
    MissingBinding(String),
    #[error("unknown placeholder {{{0}}}")]
    UnknownPlaceholder(String),
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("no transcript entry for prompt {0}")]
    TranscriptMiss(String),
    #[error("rate limited after {attempts} attempts")]
    RateLimited { attempts: u32 },
    #[error("template catalog: {0}")]
    Catalog(String),
    #[error("transcript line {line}: {message}")]
    Transcript { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Placeholder names a template body may use.
pub const ALLOWED_PLACEHOLDERS: [&str; 7] =
    ["text", "input_type", "output_type", "instruction", "input", "frames", "authors"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Labeling,
    Framing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptStyle {
    PreInstruct,
    Direct,
    Dialogue,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatTurn {
    pub role: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TemplateBody {
    Text(String),
    Chat(Vec<ChatTurn>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub template_id: String,
    pub task: Task,
    pub style: PromptStyle,
    pub body: TemplateBody,
    #[serde(default)]
    pub stop_sequences: Vec<String>,
    #[serde(default)]
    pub models: Vec<String>,
    /// Instruction bound to `{instruction}`, for instruction-following formats.
    #[serde(default)]
    pub instruction: Option<String>,
    /// Default bindings, overridden by caller bindings.
    #[serde(default)]
    pub bindings: BTreeMap<String, String>,
    #[serde(default)]
    pub top_k: Option<usize>,
    #[serde(default)]
    pub char_budget: Option<usize>,
}

impl PromptTemplate {
    pub fn text(template_id: impl Into<String>, task: Task, body: impl Into<String>) -> Self {
        Self {
            template_id: template_id.into(),
            task,
            style: PromptStyle::PreInstruct,
            body: TemplateBody::Text(body.into()),
            stop_sequences: Vec::new(),
            models: Vec::new(),
            instruction: None,
            bindings: BTreeMap::new(),
            top_k: None,
            char_budget: None,
        }
    }

    /// Placeholders in order of first appearance.
    pub fn placeholders(&self) -> Result<Vec<String>, LlmError> {
        let mut out: Vec<String> = Vec::new();
        let mut push = |body: &str| -> Result<(), LlmError> {
            for seg in segments(body) {
                if let Segment::Slot(name) = seg {
                    check_allowed(name)?;
                    if !out.iter().any(|n| n == name) {
                        out.push(name.to_string());
                    }
                }
            }
            Ok(())
        };
        match &self.body {
            TemplateBody::Text(body) => push(body)?,
            TemplateBody::Chat(turns) => {
                for turn in turns {
                    push(&turn.content)?;
                }
            }
        }
        Ok(out)
    }

    pub fn uses(&self, name: &str) -> bool {
        self.placeholders().map(|p| p.iter().any(|n| n == name)).unwrap_or(false)
    }
}

/// A rendered prompt: plain text, or chat messages for chat endpoints.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Prompt {
    Text(String),
    Chat(Vec<ChatTurn>),
}

impl Prompt {
    /// The string hashed for transcript lookup: the text itself, or the
    /// compact JSON of the message list.
    pub fn canonical(&self) -> String {
        match self {
            Prompt::Text(t) => t.clone(),
            Prompt::Chat(turns) => serde_json::to_string(turns).expect("chat turns serialize"),
        }
    }

    pub fn sha256(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }
}

enum Segment<'a> {
    Literal(&'a str),
    Slot(&'a str),
}

/// Splits a body into literal runs and `{name}` slots. A brace not followed
/// by `[a-z_]+}` is literal.
fn segments(body: &str) -> Vec<Segment<'_>> {
    let bytes = body.as_bytes();
    let mut out = Vec::new();
    let mut literal_start = 0;
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'{' {
            let name_len = bytes[i + 1..].iter().take_while(|b| b.is_ascii_lowercase() || **b == b'_').count();
            let close = i + 1 + name_len;
            if name_len > 0 && close < bytes.len() && bytes[close] == b'}' {
                if literal_start < i {
                    out.push(Segment::Literal(&body[literal_start..i]));
                }
                out.push(Segment::Slot(&body[i + 1..close]));
                i = close + 1;
                literal_start = i;
                continue;
            }
        }
        i += 1;
    }
    if literal_start < body.len() {
        out.push(Segment::Literal(&body[literal_start..]));
    }
    out
}

fn check_allowed(name: &str) -> Result<(), LlmError> {
    if ALLOWED_PLACEHOLDERS.contains(&name) {
        Ok(())
    } else {
        Err(LlmError::UnknownPlaceholder(name.to_string()))
    }
}

/// Literal single-pass substitution; bound text is never rescanned.
pub fn render_text(body: &str, bindings: &BTreeMap<String, String>) -> Result<String, LlmError> {
    let mut out = String::with_capacity(body.len());
    for seg in segments(body) {
        match seg {
            Segment::Literal(s) => out.push_str(s),
            Segment::Slot(name) => {
                check_allowed(name)?;
                let value = bindings.get(name).ok_or_else(|| LlmError::MissingBinding(name.to_string()))?;
                out.push_str(value);
            }
        }
    }
    Ok(out)
}

/// Renders a template. Template default bindings apply first; `bindings`
/// override them. Bindings for absent placeholders are ignored.
pub fn render(template: &PromptTemplate, bindings: &BTreeMap<String, String>) -> Result<Prompt, LlmError> {
    let mut all = template.bindings.clone();
    all.extend(bindings.iter().map(|(k, v)| (k.clone(), v.clone())));
    match &template.body {
        TemplateBody::Text(body) => Ok(Prompt::Text(render_text(body, &all)?)),
        TemplateBody::Chat(turns) => turns
            .iter()
            .map(|t| Ok(ChatTurn { role: t.role.clone(), content: render_text(&t.content, &all)? }))
            .collect::<Result<Vec<_>, LlmError>>()
            .map(Prompt::Chat),
    }
}

pub fn bindings<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> BTreeMap<String, String> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub prompt: Prompt,
    pub max_tokens: u32,
    pub temperature: f64,
    pub seed: u64,
    #[serde(default)]
    pub stop_sequences: Vec<String>,
    pub task: Task,
    /// Text bound to the main input slot. Only the mock backend reads it.
    #[serde(default)]
    pub input: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionResult {
    pub text: String,
    pub backend_id: String,
    pub latency: Duration,
    pub prompt_tokens: Option<u64>,
    pub completion_tokens: Option<u64>,
}

pub trait Backend: Send + Sync {
    fn backend_id(&self) -> String;
    fn complete(&self, request: &CompletionRequest) -> Result<CompletionResult, LlmError>;
}

/// Text up to the earliest stop sequence.
pub fn cut_at_stop<'a>(text: &'a str, stops: &[String]) -> &'a str {
    stops
        .iter()
        .filter(|s| !s.is_empty())
        .filter_map(|s| text.find(s.as_str()))
        .min()
        .map_or(text, |end| &text[..end])
}

/// Runs one request, applying the stop sequences to the returned text.
pub fn complete(request: &CompletionRequest, backend: &dyn Backend) -> Result<CompletionResult, LlmError> {
    let start = Instant::now();
    let mut result = backend.complete(request)?;
    result.text = cut_at_stop(&result.text, &request.stop_sequences).to_string();
    result.latency = start.elapsed();
    Ok(result)
}

/// Runs requests with at most `max_in_flight` outstanding; results keep
/// request order.
pub fn complete_all(
    requests: &[CompletionRequest],
    backend: &dyn Backend,
    max_in_flight: usize,
) -> Vec<Result<CompletionResult, LlmError>> {
    pool::map_bounded(requests, max_in_flight, |r| complete(r, backend))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slots_require_lowercase_names_and_a_closing_brace() {
        let b = bindings([("text", "X")]);
        assert_eq!(render_text("{ \"a\": 1 } {text} {Text} {", &b).unwrap(), "{ \"a\": 1 } X {Text} {");
    }

    #[test]
    fn bound_text_is_not_rescanned() {
        let b = bindings([("text", "{input}"), ("input", "no")]);
        assert_eq!(render_text("{text}", &b).unwrap(), "{input}");
    }

    #[test]
    fn unknown_and_missing_placeholders() {
        assert!(matches!(render_text("{foo}", &BTreeMap::new()), Err(LlmError::UnknownPlaceholder(n)) if n == "foo"));
        assert!(matches!(render_text("{input}", &BTreeMap::new()), Err(LlmError::MissingBinding(n)) if n == "input"));
    }

    #[test]
    fn stop_sequences_cut_at_the_earliest() {
        let stops = vec!["\"".to_string(), "\n".to_string()];
        assert_eq!(cut_at_stop("Shoes\nand \"x\"", &stops), "Shoes");
        assert_eq!(cut_at_stop("plain", &stops), "plain");
    }

    #[test]
    fn chat_prompts_hash_their_json() {
        let p = Prompt::Chat(vec![ChatTurn { role: "user".into(), content: "hi".into() }]);
        assert_eq!(p.canonical(), r#"[{"role":"user","content":"hi"}]"#);
        assert_eq!(Prompt::Text("abc".into()).sha256(), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
