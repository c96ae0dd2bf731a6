use std::collections::HashMap;

use super::{EvalError, FramePrediction, ReferenceSample};

/// Percentage of references for which one of the first `k` predicted frames
/// is a reference frame. References without a prediction count as misses.
/// `predictions` must belong to one model and setting.
pub fn topk_frame_accuracy(
    predictions: &[FramePrediction],
    references: &[ReferenceSample],
    k: usize,
) -> Result<f64, EvalError> {
    Ok(accuracy_by_k(predictions, references)?[match k {
        1..=3 => k - 1,
        _ => return Err(EvalError::InvalidK(k)),
    }])
}

/// Top-1, top-2 and top-3 accuracy in one pass.
pub fn accuracy_by_k(predictions: &[FramePrediction], references: &[ReferenceSample]) -> Result<[f64; 3], EvalError> {
    if references.is_empty() {
        return Err(EvalError::DegenerateInput("empty reference set".into()));
    }
    let mut by_id: HashMap<&str, &ReferenceSample> = HashMap::new();
    for r in references {
        if by_id.insert(&r.sample_id, r).is_some() {
            return Err(EvalError::Duplicate { what: "reference", id: r.sample_id.clone() });
        }
    }
    let mut seen = std::collections::HashSet::new();
    let mut hits = [0usize; 3];
    for p in predictions {
        let reference = by_id.get(p.sample_id.as_str()).ok_or_else(|| EvalError::KeyMismatch(p.sample_id.clone()))?;
        if !seen.insert(p.sample_id.as_str()) {
            return Err(EvalError::Duplicate { what: "prediction", id: p.sample_id.clone() });
        }
        if let Some(rank) = p.frames.iter().take(3).position(|f| reference.frames.contains(f)) {
            for h in &mut hits[rank..] {
                *h += 1;
            }
        }
    }
    let n = references.len() as f64;
    Ok(hits.map(|h| 100.0 * h as f64 / n))
}
