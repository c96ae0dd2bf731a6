//! Evaluation harness: frame accuracy against a reference set, ROUGE for
//! labels, and rank fusion and concordance for preference studies.

mod accuracy;
mod rank;
mod report;
mod rouge;

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::framing::FrameSetting;

pub use accuracy::{accuracy_by_k, topk_frame_accuracy};
pub use rank::{concordance_by_item, kendalls_w, rrf_fuse, FusedScore, RRF_K};
pub use report::{accuracy_report, label_quality_report, AccuracyReport, AccuracyRow, LabelQualityReport, LabelQualityRow};
pub use rouge::{rouge, tokenize, RougeScore, RougeVariant};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("prediction for sample {0:?} has no reference")]
    KeyMismatch(String),
    #[error("duplicate {what} for sample {id:?}")]
    Duplicate { what: &'static str, id: String },
    #[error("k must be 1, 2 or 3, got {0}")]
    InvalidK(usize),
    #[error("no rankings given")]
    NoRankings,
    #[error("ranking {index} covers a different model set")]
    InconsistentModelSets { index: usize },
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("reference {id:?}: {message}")]
    InvalidReference { id: String, message: String },
    #[error("{path} line {line}: {message}")]
    Jsonl { path: String, line: usize, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One annotated cluster label with its 1 or 2 reference frames.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceSample {
    pub sample_id: String,
    pub label: String,
    pub frames: Vec<String>,
}

/// A model's ordered frames for one reference sample. Empty frames mean the
/// answer did not parse.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FramePrediction {
    pub sample_id: String,
    pub model_id: String,
    #[serde(default)]
    pub setting: FrameSetting,
    pub frames: Vec<String>,
}

/// A generated label compared against the reference label of the sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelPrediction {
    pub sample_id: String,
    pub model_id: String,
    pub label: String,
}

/// One annotator's order of models for one item, best first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreferenceRanking {
    pub annotator_id: String,
    pub item_id: String,
    pub ranking: Vec<String>,
}

/// Rejects references with no frames, more than two, or names outside the
/// inventory.
pub fn validate_references(
    references: &[ReferenceSample],
    inventory: &crate::framing::FrameInventory,
) -> Result<(), EvalError> {
    let names = inventory.canonical_names();
    let mut seen = std::collections::HashSet::new();
    for r in references {
        if !seen.insert(r.sample_id.as_str()) {
            return Err(EvalError::Duplicate { what: "reference", id: r.sample_id.clone() });
        }
        let bad = |message: String| Err(EvalError::InvalidReference { id: r.sample_id.clone(), message });
        if r.frames.is_empty() || r.frames.len() > 2 {
            return bad(format!("{} reference frames", r.frames.len()));
        }
        if let Some(f) = r.frames.iter().find(|f| !names.contains(f)) {
            return bad(format!("unknown frame {f:?}"));
        }
    }
    Ok(())
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, EvalError> {
    parse_jsonl(&std::fs::read_to_string(path)?, &path.display().to_string())
}

/// Blank lines are skipped.
pub fn parse_jsonl<T: DeserializeOwned>(text: &str, origin: &str) -> Result<Vec<T>, EvalError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| EvalError::Jsonl {
                path: origin.to_string(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn to_jsonl<T: Serialize>(records: &[T]) -> String {
    records.iter().map(|r| serde_json::to_string(r).expect("record serializes") + "\n").collect()
}
