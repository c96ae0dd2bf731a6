//! Frame assignment: a generic inventory of policy frames, prompt payloads
//! in four settings, and a tolerant parser for model answers.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::labeling::ClusterLabel;
use crate::llm::{self, Backend, Catalog, CompletionRequest, LlmError, Prompt, Task};
use crate::pool;

#[derive(Debug, Error)]
pub enum FramingError {
    #[error("label for cluster {0} is empty")]
    EmptyLabel(usize),
    #[error("no frame recognized in model output {raw:?}")]
    FrameParseFailure { raw: String },
    #[error("invalid frame inventory: {0}")]
    InvalidInventory(String),
    #[error("few-shot prompts need 3 examples per frame; {0} has {1}")]
    MissingExamples(String, usize),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Frame {
    pub canonical_name: String,
    /// Lowercase name used inside prompt payloads.
    pub prompt_name: String,
    pub short_description: String,
    pub full_description: String,
    #[serde(default)]
    pub examples: Vec<String>,
    #[serde(default)]
    pub aliases: Vec<String>,
    /// Whether the frame is listed in prompt payloads.
    #[serde(default = "default_true")]
    pub in_prompts: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameInventory {
    pub version: u32,
    pub citation: String,
    pub frames: Vec<Frame>,
}

pub const OTHER: &str = "Other";

/// Lowercase, `&` read as "and", punctuation as space, whitespace collapsed.
pub fn normalize_name(text: &str) -> String {
    let spaced: String = text
        .to_lowercase()
        .replace('&', " and ")
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect();
    spaced.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// URL-friendly form: `Health & Safety` → `health-and-safety`.
pub fn slug(name: &str) -> String {
    normalize_name(name).replace(' ', "-")
}

impl FrameInventory {
    pub fn bundled() -> Self {
        Self::from_json(include_str!("../data/frames.json")).expect("bundled inventory is valid")
    }

    pub fn from_json(raw: &str) -> Result<Self, FramingError> {
        let inv: Self = serde_json::from_str(raw).map_err(|e| FramingError::InvalidInventory(e.to_string()))?;
        inv.validate()?;
        Ok(inv)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, FramingError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), FramingError> {
        let mut seen = std::collections::HashSet::new();
        for f in &self.frames {
            if !seen.insert(normalize_name(&f.canonical_name)) {
                return Err(FramingError::InvalidInventory(format!("duplicate frame {}", f.canonical_name)));
            }
        }
        if !self.frames.iter().any(|f| f.canonical_name == OTHER) {
            return Err(FramingError::InvalidInventory("no Other frame".into()));
        }
        Ok(())
    }

    pub fn prompt_frames(&self) -> impl Iterator<Item = &Frame> + '_ {
        self.frames.iter().filter(|f| f.in_prompts)
    }

    /// Looks a frame up by canonical name, prompt name, alias or slug.
    pub fn find(&self, name: &str) -> Option<&Frame> {
        let wanted = normalize_name(name);
        self.frames.iter().find(|f| names_of(f).any(|n| n == wanted))
    }

    pub fn canonical_names(&self) -> Vec<String> {
        self.frames.iter().map(|f| f.canonical_name.clone()).collect()
    }
}

fn names_of(frame: &Frame) -> impl Iterator<Item = String> + '_ {
    std::iter::once(&frame.canonical_name)
        .chain(std::iter::once(&frame.prompt_name))
        .chain(frame.aliases.iter())
        .map(|n| normalize_name(n))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FrameSetting {
    #[default]
    ZeroShotLabels,
    ZeroShotShort,
    ZeroShotFull,
    FewShot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FrameStyle {
    #[default]
    Direct,
    Dialogue,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FramePromptConfig {
    pub setting: FrameSetting,
    pub include_citation: bool,
    pub style: FrameStyle,
    /// Catalog template; when unset, `frame-chat` for direct and
    /// `frame-vicuna` for dialogue.
    pub template: Option<String>,
}

impl Default for FramePromptConfig {
    fn default() -> Self {
        Self { setting: FrameSetting::ZeroShotLabels, include_citation: true, style: FrameStyle::Direct, template: None }
    }
}

impl FramePromptConfig {
    pub fn template_id(&self) -> &str {
        self.template.as_deref().unwrap_or(match self.style {
            FrameStyle::Direct => "frame-chat",
            FrameStyle::Dialogue => "frame-vicuna",
        })
    }

    fn instruction_id(&self) -> &'static str {
        match self.style {
            FrameStyle::Direct => "frame-direct",
            FrameStyle::Dialogue => "frame-dialogue",
        }
    }
}

/// The `{frames}` payload and its `{input_type}` word.
pub fn frames_payload(inventory: &FrameInventory, setting: FrameSetting) -> Result<(String, &'static str), FramingError> {
    let frames: Vec<&Frame> = inventory.prompt_frames().collect();
    if setting == FrameSetting::ZeroShotLabels {
        let names: Vec<&str> = frames.iter().map(|f| f.prompt_name.as_str()).collect();
        return Ok((serde_json::to_string_pretty(&names).expect("names serialize"), "list"));
    }
    let mut payload = Map::new();
    for f in frames {
        let entry = match setting {
            FrameSetting::ZeroShotShort => json!({ "description": f.short_description }),
            FrameSetting::ZeroShotFull => json!({ "description": f.full_description }),
            _ => {
                if f.examples.len() != 3 {
                    return Err(FramingError::MissingExamples(f.canonical_name.clone(), f.examples.len()));
                }
                json!({ "description": f.full_description, "examples": f.examples })
            }
        };
        payload.insert(f.prompt_name.clone(), entry);
    }
    Ok((serde_json::to_string_pretty(&Value::Object(payload)).expect("payload serializes"), "JSON"))
}

/// Renders the frame-assignment prompt for one cluster label.
pub fn build_frame_prompt(
    label_text: &str,
    inventory: &FrameInventory,
    cfg: &FramePromptConfig,
    catalog: &Catalog,
) -> Result<Prompt, FramingError> {
    let (payload, input_type) = frames_payload(inventory, cfg.setting)?;
    let instruction = catalog.instruction(cfg.instruction_id())?;
    let instruction_text = llm::render_text(
        &instruction.body_with_citation(cfg.include_citation),
        &llm::bindings([("input_type", input_type), ("frames", payload.as_str()), ("authors", inventory.citation.as_str())]),
    )?;
    let template = catalog.template(cfg.template_id())?;
    Ok(llm::render(template, &llm::bindings([("instruction", instruction_text.as_str()), ("input", label_text)]))?)
}

/// Splits model output into list-like items, in order.
fn items(raw: &str) -> impl Iterator<Item = &str> {
    raw.split(['\n', ',', ';', '"', '\'', '[', ']', '{', '}', ':', '|'])
}

fn is_other_item(item: &str) -> bool {
    let norm = normalize_name(item);
    let words: Vec<&str> = norm
        .split(' ')
        .skip_while(|w| w.chars().all(|c| c.is_ascii_digit()) || *w == "frame")
        .collect();
    words == ["other"]
}

/// Frame names mentioned in `raw`, in order of first mention, at most three.
pub fn parse_frames(raw: &str, inventory: &FrameInventory) -> Result<Vec<String>, FramingError> {
    let patterns: Vec<(&Frame, Vec<String>)> = inventory
        .frames
        .iter()
        .filter(|f| f.canonical_name != OTHER)
        .map(|f| (f, names_of(f).map(|n| format!(" {n} ")).collect()))
        .collect();
    let other = inventory.frames.iter().find(|f| f.canonical_name == OTHER);

    // first mention of each frame as (item index, offset in item)
    let mut first: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let mut note = |name: &str, at: (usize, usize)| {
        let slot = first.entry(name.to_string()).or_insert(at);
        if at < *slot {
            *slot = at;
        }
    };
    for (idx, item) in items(raw).enumerate() {
        let padded = format!(" {} ", normalize_name(item));
        for (frame, names) in &patterns {
            if let Some(pos) = names.iter().filter_map(|n| padded.find(n.as_str())).min() {
                note(&frame.canonical_name, (idx, pos));
            }
        }
        if let Some(other) = other {
            if is_other_item(item) {
                note(&other.canonical_name, (idx, 0));
            }
        }
    }
    let mut ordered: Vec<(String, (usize, usize))> = first.into_iter().collect();
    ordered.sort_by_key(|(_, at)| *at);
    let frames: Vec<String> = ordered.into_iter().take(3).map(|(n, _)| n).collect();
    if frames.is_empty() {
        Err(FramingError::FrameParseFailure { raw: raw.to_string() })
    } else {
        Ok(frames)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameAssignment {
    pub cluster_id: usize,
    pub frames: Vec<String>,
    pub raw_output: String,
    pub model_id: String,
    /// Set when the first answer did not parse and the fallback prompt was used.
    #[serde(default)]
    pub retried: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameFailure {
    pub cluster_id: usize,
    pub raw_output: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FramesArtifact {
    pub discussion_id: String,
    pub model_id: String,
    pub config: FramePromptConfig,
    pub assignments: Vec<FrameAssignment>,
    #[serde(default)]
    pub failures: Vec<FrameFailure>,
}

/// Frame assignment settings shared by every label of a run.
#[derive(Debug, Clone)]
pub struct Framer {
    pub inventory: FrameInventory,
    pub catalog: Catalog,
    pub config: FramePromptConfig,
    pub seed: u64,
    pub temperature: f64,
    pub max_tokens: u32,
    pub model_id: Option<String>,
}

impl Framer {
    pub fn new(inventory: FrameInventory, catalog: Catalog, config: FramePromptConfig, seed: u64) -> Self {
        let max_tokens = catalog.max_tokens(Task::Framing);
        Self { inventory, catalog, config, seed, temperature: 0.0, max_tokens, model_id: None }
    }

    fn request(&self, label_text: &str, cfg: &FramePromptConfig) -> Result<CompletionRequest, FramingError> {
        let template = self.catalog.template(cfg.template_id())?;
        Ok(CompletionRequest {
            prompt: build_frame_prompt(label_text, &self.inventory, cfg, &self.catalog)?,
            max_tokens: self.max_tokens,
            temperature: self.temperature,
            seed: self.seed,
            stop_sequences: template.stop_sequences.clone(),
            task: Task::Framing,
            input: label_text.to_string(),
        })
    }

    /// Prompt, complete, parse; on a parse failure, one retry with the bare
    /// label-list prompt.
    pub fn assign(&self, label: &ClusterLabel, backend: &dyn Backend) -> Result<FrameAssignment, FramingError> {
        if label.text.trim().is_empty() {
            return Err(FramingError::EmptyLabel(label.cluster_id));
        }
        let model_id = self.model_id.clone().unwrap_or_else(|| backend.backend_id());
        let first = llm::complete(&self.request(&label.text, &self.config)?, backend)?;
        if let Ok(frames) = parse_frames(&first.text, &self.inventory) {
            return Ok(FrameAssignment { cluster_id: label.cluster_id, frames, raw_output: first.text, model_id, retried: false });
        }
        let fallback = FramePromptConfig { setting: FrameSetting::ZeroShotLabels, ..self.config.clone() };
        let second = llm::complete(&self.request(&label.text, &fallback)?, backend)?;
        let frames = parse_frames(&second.text, &self.inventory)?;
        Ok(FrameAssignment { cluster_id: label.cluster_id, frames, raw_output: second.text, model_id, retried: true })
    }

    /// Assigns every label; results keep label order.
    pub fn assign_all(
        &self,
        labels: &[ClusterLabel],
        backend: &dyn Backend,
        max_in_flight: usize,
    ) -> Vec<Result<FrameAssignment, FramingError>> {
        pool::map_bounded(labels, max_in_flight, |l| self.assign(l, backend))
    }
}
