use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{accuracy_by_k, rouge, EvalError, FramePrediction, LabelPrediction, ReferenceSample, RougeVariant};
use crate::framing::FrameSetting;

/// Accuracy per model, one column per prompt setting. A setting with no
/// predictions is left empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub model_id: String,
    #[serde(rename = "zero-shot")]
    pub zero_shot: Option<f64>,
    pub short: Option<f64>,
    pub full: Option<f64>,
    #[serde(rename = "few-shot")]
    pub few_shot: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub k: usize,
    pub samples: usize,
    pub rows: Vec<AccuracyRow>,
}

pub fn accuracy_report(
    predictions: &[FramePrediction],
    references: &[ReferenceSample],
    k: usize,
) -> Result<AccuracyReport, EvalError> {
    if !(1..=3).contains(&k) {
        return Err(EvalError::InvalidK(k));
    }
    let mut groups: BTreeMap<&str, HashMap<FrameSetting, Vec<FramePrediction>>> = BTreeMap::new();
    for p in predictions {
        groups.entry(&p.model_id).or_default().entry(p.setting).or_default().push(p.clone());
    }
    let mut rows = Vec::new();
    for (model_id, by_setting) in groups {
        let cell = |s: FrameSetting| -> Result<Option<f64>, EvalError> {
            by_setting.get(&s).map(|ps| accuracy_by_k(ps, references).map(|a| a[k - 1])).transpose()
        };
        rows.push(AccuracyRow {
            model_id: model_id.to_string(),
            zero_shot: cell(FrameSetting::ZeroShotLabels)?,
            short: cell(FrameSetting::ZeroShotShort)?,
            full: cell(FrameSetting::ZeroShotFull)?,
            few_shot: cell(FrameSetting::FewShot)?,
        });
    }
    Ok(AccuracyReport { k, samples: references.len(), rows })
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.1}")).unwrap_or_default()
}

impl AccuracyReport {
    /// Percentages with one decimal.
    pub fn to_csv(&self) -> Result<String, EvalError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["model", "zero-shot", "short", "full", "few-shot"])?;
        for r in &self.rows {
            w.write_record([r.model_id.clone(), cell(r.zero_shot), cell(r.short), cell(r.full), cell(r.few_shot)])?;
        }
        Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv is utf-8"))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

/// Mean ROUGE F1 per model over the reference set; the embedding-based
/// similarity column is not computed and stays empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelQualityRow {
    pub model_id: String,
    #[serde(rename = "rouge-1")]
    pub rouge_1: f64,
    #[serde(rename = "rouge-2")]
    pub rouge_2: f64,
    #[serde(rename = "rouge-l")]
    pub rouge_l: f64,
    pub bertscore: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelQualityReport {
    pub samples: usize,
    pub rows: Vec<LabelQualityRow>,
}

/// Missing predictions score zero.
pub fn label_quality_report(
    predictions: &[LabelPrediction],
    references: &[ReferenceSample],
) -> Result<LabelQualityReport, EvalError> {
    if references.is_empty() {
        return Err(EvalError::DegenerateInput("empty reference set".into()));
    }
    let by_id: HashMap<&str, &ReferenceSample> = references.iter().map(|r| (r.sample_id.as_str(), r)).collect();
    let mut sums: BTreeMap<&str, ([f64; 3], std::collections::HashSet<&str>)> = BTreeMap::new();
    for p in predictions {
        let r = by_id.get(p.sample_id.as_str()).ok_or_else(|| EvalError::KeyMismatch(p.sample_id.clone()))?;
        let entry = sums.entry(&p.model_id).or_default();
        if !entry.1.insert(&p.sample_id) {
            return Err(EvalError::Duplicate { what: "prediction", id: p.sample_id.clone() });
        }
        for (acc, v) in entry.0.iter_mut().zip([RougeVariant::One, RougeVariant::Two, RougeVariant::Lcs]) {
            *acc += rouge(&p.label, &r.label, v).f1;
        }
    }
    let n = references.len() as f64;
    let rows = sums
        .into_iter()
        .map(|(m, (s, _))| LabelQualityRow {
            model_id: m.to_string(),
            rouge_1: s[0] / n,
            rouge_2: s[1] / n,
            rouge_l: s[2] / n,
            bertscore: None,
        })
        .collect();
    Ok(LabelQualityReport { samples: references.len(), rows })
}

impl LabelQualityReport {
    pub fn to_csv(&self) -> Result<String, EvalError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["model", "rouge-1", "rouge-2", "rouge-l", "bertscore"])?;
        for r in &self.rows {
            let f = |x: f64| format!("{x:.4}");
            w.write_record([r.model_id.clone(), f(r.rouge_1), f(r.rouge_2), f(r.rouge_l), String::new()])?;
        }
        Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv is utf-8"))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}
