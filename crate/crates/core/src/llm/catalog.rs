use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ChatTurn, LlmError, PromptStyle, PromptTemplate, Task, TemplateBody};

macro_rules! bundled {
    ($($path:literal),* $(,)?) => {
        &[$(($path, include_str!(concat!("../../data/templates/", $path)))),*]
    };
}

const BUNDLED_MANIFEST: &str = include_str!("../../data/templates/manifest.toml");
const BUNDLED_FILES: &[(&str, &str)] = bundled![
    "instruction/label-direct.txt",
    "instruction/label-dialogue.txt",
    "instruction/frame-direct.txt",
    "instruction/frame-dialogue.txt",
    "label/t0-prefix.txt",
    "label/t0-postfix.txt",
    "label/t0-prefix-postfix.txt",
    "label/t0-short.txt",
    "label/t0-explicit.txt",
    "label/t0-qa.txt",
    "label/decoder-dialogue.txt",
    "label/decoder-explicit.txt",
    "label/decoder-assistant-solo.txt",
    "label/decoder-qa.txt",
    "label/bloom.txt",
    "label/gpt-neox.txt",
    "label/opt-66b.txt",
    "label/gpt35.txt",
    "label/instr-gpt35.txt",
    "label/instr-alpaca.txt",
    "label/instr-baize.txt",
    "label/instr-user-assistant.txt",
    "label/instr-oasst.txt",
    "label/instr-t0pp.txt",
    "frame/alpaca.txt",
    "frame/vicuna.txt",
    "frame/oasst.txt",
    "frame/llama.txt",
    "frame/baize.txt",
    "frame/gpt35.txt",
    "frame/chat.json",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogDefaults {
    pub top_k: usize,
    pub char_budget: usize,
    pub label_max_tokens: u32,
    pub frame_max_tokens: u32,
}

impl Default for CatalogDefaults {
    fn default() -> Self {
        Self { top_k: 20, char_budget: 6000, label_max_tokens: 64, frame_max_tokens: 128 }
    }
}

/// Instruction text bound into `{instruction}`. `citation_span` is the
/// substring dropped when the inventory citation is not wanted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instruction {
    pub id: String,
    pub body: String,
    pub citation_span: Option<String>,
}

impl Instruction {
    pub fn body_with_citation(&self, cite: bool) -> String {
        match (&self.citation_span, cite) {
            (Some(span), false) => self.body.replacen(span.as_str(), "", 1),
            _ => self.body.clone(),
        }
    }
}

#[derive(Deserialize)]
struct Manifest {
    version: u32,
    #[serde(default)]
    defaults: CatalogDefaults,
    #[serde(default)]
    instruction: Vec<InstructionEntry>,
    #[serde(default)]
    template: Vec<TemplateEntry>,
}

#[derive(Deserialize)]
struct InstructionEntry {
    id: String,
    file: String,
    citation_span: Option<String>,
}

#[derive(Deserialize)]
struct TemplateEntry {
    id: String,
    file: String,
    task: Task,
    style: PromptStyle,
    #[serde(default)]
    models: Vec<String>,
    #[serde(default)]
    stop: Vec<String>,
    instruction: Option<String>,
    #[serde(default)]
    bindings: BTreeMap<String, String>,
    top_k: Option<usize>,
    char_budget: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    pub version: u32,
    pub defaults: CatalogDefaults,
    templates: Vec<PromptTemplate>,
    instructions: Vec<Instruction>,
}

fn strip_final_newline(raw: &str) -> &str {
    raw.strip_suffix('\n').map_or(raw, |s| s.strip_suffix('\r').unwrap_or(s))
}

impl Catalog {
    pub fn bundled() -> Self {
        Self::from_manifest(BUNDLED_MANIFEST, |file| {
            BUNDLED_FILES
                .iter()
                .find(|(name, _)| *name == file)
                .map(|(_, body)| body.to_string())
                .ok_or_else(|| LlmError::Catalog(format!("bundled file {file} missing")))
        })
        .expect("bundled catalog is valid")
    }

    pub fn from_dir(dir: impl AsRef<Path>) -> Result<Self, LlmError> {
        let dir = dir.as_ref();
        let manifest = std::fs::read_to_string(dir.join("manifest.toml"))?;
        Self::from_manifest(&manifest, |file| Ok(std::fs::read_to_string(dir.join(file))?))
    }

    pub fn from_manifest(
        manifest: &str,
        load: impl Fn(&str) -> Result<String, LlmError>,
    ) -> Result<Self, LlmError> {
        let m: Manifest = toml::from_str(manifest).map_err(|e| LlmError::Catalog(e.to_string()))?;
        let instructions = m
            .instruction
            .into_iter()
            .map(|e| {
                let body = strip_final_newline(&load(&e.file)?).to_string();
                if let Some(span) = &e.citation_span {
                    if !body.contains(span.as_str()) {
                        return Err(LlmError::Catalog(format!("instruction {}: citation span not in body", e.id)));
                    }
                }
                Ok(Instruction { id: e.id, body, citation_span: e.citation_span })
            })
            .collect::<Result<Vec<_>, LlmError>>()?;

        let mut templates = Vec::with_capacity(m.template.len());
        let mut seen = HashSet::new();
        for e in m.template {
            if !seen.insert(e.id.clone()) {
                return Err(LlmError::Catalog(format!("duplicate template id {}", e.id)));
            }
            if let Some(instr) = &e.instruction {
                if !instructions.iter().any(|i| &i.id == instr) {
                    return Err(LlmError::Catalog(format!("template {}: unknown instruction {instr}", e.id)));
                }
            }
            let raw = load(&e.file)?;
            let body = if e.file.ends_with(".json") {
                let turns: Vec<ChatTurn> = serde_json::from_str(&raw)
                    .map_err(|err| LlmError::Catalog(format!("{}: {err}", e.file)))?;
                TemplateBody::Chat(turns)
            } else {
                TemplateBody::Text(strip_final_newline(&raw).to_string())
            };
            let template = PromptTemplate {
                template_id: e.id,
                task: e.task,
                style: e.style,
                body,
                stop_sequences: e.stop,
                models: e.models,
                instruction: e.instruction,
                bindings: e.bindings,
                top_k: e.top_k,
                char_budget: e.char_budget,
            };
            template.placeholders()?;
            templates.push(template);
        }
        Ok(Self { version: m.version, defaults: m.defaults, templates, instructions })
    }

    pub fn templates(&self) -> &[PromptTemplate] {
        &self.templates
    }

    pub fn template(&self, id: &str) -> Result<&PromptTemplate, LlmError> {
        self.templates
            .iter()
            .find(|t| t.template_id == id)
            .ok_or_else(|| LlmError::Catalog(format!("no template {id}")))
    }

    pub fn instruction(&self, id: &str) -> Result<&Instruction, LlmError> {
        self.instructions
            .iter()
            .find(|i| i.id == id)
            .ok_or_else(|| LlmError::Catalog(format!("no instruction {id}")))
    }

    /// First template of `task` listing `model`.
    pub fn for_model(&self, model: &str, task: Task) -> Option<&PromptTemplate> {
        self.templates.iter().find(|t| t.task == task && t.models.iter().any(|m| m == model))
    }

    pub fn top_k(&self, template: &PromptTemplate) -> usize {
        template.top_k.unwrap_or(self.defaults.top_k)
    }

    pub fn char_budget(&self, template: &PromptTemplate) -> usize {
        template.char_budget.unwrap_or(self.defaults.char_budget)
    }

    pub fn max_tokens(&self, task: Task) -> u32 {
        match task {
            Task::Labeling => self.defaults.label_max_tokens,
            Task::Framing => self.defaults.frame_max_tokens,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_bundled_file_is_referenced() {
        let manifest: Manifest = toml::from_str(BUNDLED_MANIFEST).unwrap();
        let referenced: HashSet<&str> = manifest
            .template
            .iter()
            .map(|t| t.file.as_str())
            .chain(manifest.instruction.iter().map(|i| i.file.as_str()))
            .collect();
        for (name, _) in BUNDLED_FILES {
            assert!(referenced.contains(name), "{name}");
        }
        assert_eq!(referenced.len(), BUNDLED_FILES.len());
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let manifest = r#"
version = 1
[[template]]
id = "a"
file = "x.txt"
task = "labeling"
style = "direct"
[[template]]
id = "a"
file = "x.txt"
task = "labeling"
style = "direct"
"#;
        let err = Catalog::from_manifest(manifest, |_| Ok("{text}".into())).unwrap_err();
        assert!(err.to_string().contains("duplicate"));
    }

    #[test]
    fn citation_span_is_removed_once() {
        let c = Catalog::bundled();
        let i = c.instruction("frame-dialogue").unwrap();
        assert!(i.body.contains("as defined by {authors}: {frames}."));
        assert!(i.body_with_citation(false).contains("The assistant knows all media frames: {frames}."));
    }
}
