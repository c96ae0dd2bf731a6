//! Two-level table-of-contents summary: frames as headings, cluster labels
//! as entries ordered by cluster size.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::Clustering;
use crate::framing::FrameAssignment;
use crate::labeling::ClusterLabel;

#[derive(Debug, Error)]
pub enum SummaryError {
    #[error("cluster {0} has a label but no frame assignment")]
    MissingAssignment(usize),
    #[error("cluster {0} is not part of the clustering")]
    UnknownCluster(usize),
    #[error("invalid summary: {0}")]
    Invalid(String),
    #[error("markdown line {line}: {message}")]
    Markdown { line: usize, message: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryEntry {
    pub cluster_id: usize,
    pub label: String,
    pub size: usize,
    pub secondary_frame: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummarySection {
    pub frame: String,
    pub entries: Vec<SummaryEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndicativeSummary {
    pub discussion_id: String,
    pub model_id: String,
    pub sections: Vec<SummarySection>,
}

/// Files every labeled cluster under its first assigned frame.
pub fn assemble(
    discussion_id: &str,
    model_id: &str,
    labels: &[ClusterLabel],
    assignments: &[FrameAssignment],
    clustering: &Clustering,
) -> Result<IndicativeSummary, SummaryError> {
    let sizes: HashMap<usize, usize> = clustering.clusters.iter().map(|c| (c.cluster_id, c.member_ids.len())).collect();
    let frames: HashMap<usize, &[String]> = assignments.iter().map(|a| (a.cluster_id, a.frames.as_slice())).collect();
    let mut by_frame: BTreeMap<String, Vec<SummaryEntry>> = BTreeMap::new();
    for label in labels {
        let size = *sizes.get(&label.cluster_id).ok_or(SummaryError::UnknownCluster(label.cluster_id))?;
        let assigned = frames
            .get(&label.cluster_id)
            .filter(|f| !f.is_empty())
            .ok_or(SummaryError::MissingAssignment(label.cluster_id))?;
        by_frame.entry(assigned[0].clone()).or_default().push(SummaryEntry {
            cluster_id: label.cluster_id,
            label: label.text.clone(),
            size,
            secondary_frame: assigned.get(1).cloned(),
        });
    }
    let sections = by_frame
        .into_iter()
        .map(|(frame, mut entries)| {
            entries.sort_by(|a, b| b.size.cmp(&a.size).then(a.cluster_id.cmp(&b.cluster_id)));
            SummarySection { frame, entries }
        })
        .collect();
    Ok(IndicativeSummary { discussion_id: discussion_id.to_string(), model_id: model_id.to_string(), sections })
}

impl IndicativeSummary {
    /// Checks the ordering and uniqueness rules.
    pub fn validate(&self) -> Result<(), SummaryError> {
        let invalid = |m: String| Err(SummaryError::Invalid(m));
        let mut seen = HashSet::new();
        for (i, section) in self.sections.iter().enumerate() {
            if section.entries.is_empty() {
                return invalid(format!("section {:?} is empty", section.frame));
            }
            if i > 0 && self.sections[i - 1].frame >= section.frame {
                return invalid(format!("section {:?} is out of order", section.frame));
            }
            for (j, e) in section.entries.iter().enumerate() {
                if !seen.insert(e.cluster_id) {
                    return invalid(format!("cluster {} appears twice", e.cluster_id));
                }
                if e.label.is_empty() || e.label.contains('\n') {
                    return invalid(format!("cluster {} has an empty or multi-line label", e.cluster_id));
                }
                if j > 0 {
                    let p = &section.entries[j - 1];
                    if (std::cmp::Reverse(p.size), p.cluster_id) >= (std::cmp::Reverse(e.size), e.cluster_id) {
                        return invalid(format!("cluster {} is out of order in {:?}", e.cluster_id, section.frame));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn entry_count(&self) -> usize {
        self.sections.iter().map(|s| s.entries.len()).sum()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, SummaryError> {
        let summary: Self = serde_json::from_str(text)?;
        summary.validate()?;
        Ok(summary)
    }

    /// Frames become `##` headings and entries `- label [size] (secondary)`
    /// items. Identifiers ride along in HTML comments so the text parses back.
    pub fn to_markdown(&self) -> String {
        let mut out = format!(
            "<!-- discussion: {} model: {} -->\n",
            serde_json::to_string(&self.discussion_id).expect("string"),
            serde_json::to_string(&self.model_id).expect("string")
        );
        for section in &self.sections {
            out.push_str(&format!("\n## {}\n\n", section.frame));
            for e in &section.entries {
                out.push_str(&format!("- {} [{}]", e.label, e.size));
                if let Some(second) = &e.secondary_frame {
                    out.push_str(&format!(" ({second})"));
                }
                out.push_str(&format!(" <!-- cluster {} -->\n", e.cluster_id));
            }
        }
        out
    }

    pub fn from_markdown(text: &str) -> Result<Self, SummaryError> {
        let err = |line: usize, message: &str| SummaryError::Markdown { line, message: message.to_string() };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (_, header) = lines.next().ok_or_else(|| err(1, "empty document"))?;
        let (discussion_id, model_id) = parse_header(header).ok_or_else(|| err(1, "missing identifier comment"))?;
        let mut sections: Vec<SummarySection> = Vec::new();
        for (n, line) in lines {
            if line.is_empty() {
                continue;
            }
            if let Some(frame) = line.strip_prefix("## ") {
                sections.push(SummarySection { frame: frame.to_string(), entries: Vec::new() });
            } else if let Some(item) = line.strip_prefix("- ") {
                let section = sections.last_mut().ok_or_else(|| err(n, "entry before the first heading"))?;
                section.entries.push(parse_entry(item).ok_or_else(|| err(n, "malformed entry"))?);
            } else {
                return Err(err(n, "unexpected line"));
            }
        }
        let summary = Self { discussion_id, model_id, sections };
        summary.validate()?;
        Ok(summary)
    }
}

fn parse_header(line: &str) -> Option<(String, String)> {
    let body = line.strip_prefix("<!-- discussion: ")?.strip_suffix(" -->")?;
    let mut de = serde_json::Deserializer::from_str(body).into_iter::<String>();
    let discussion = de.next()?.ok()?;
    let rest = body[de.byte_offset()..].strip_prefix(" model: ")?;
    let model: String = serde_json::from_str(rest).ok()?;
    Some((discussion, model))
}

fn parse_entry(item: &str) -> Option<SummaryEntry> {
    let (rest, id) = item.rsplit_once(" <!-- cluster ")?;
    let cluster_id = id.strip_suffix(" -->")?.parse().ok()?;
    let (rest, secondary_frame) = match rest.strip_suffix(')') {
        Some(inner) => {
            let (head, frame) = inner.rsplit_once(" (")?;
            (head, Some(frame.to_string()))
        }
        _ => (rest, None),
    };
    let (label, size) = rest.strip_suffix(']')?.rsplit_once(" [")?;
    if size.is_empty() || !size.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    Some(SummaryEntry { cluster_id, label: label.to_string(), size: size.parse().ok()?, secondary_frame })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entry_parsing_handles_brackets_inside_labels() {
        let e = parse_entry("Tax [VAT] (and more) [5] <!-- cluster 2 -->").unwrap();
        assert_eq!((e.label.as_str(), e.size, e.secondary_frame), ("Tax [VAT] (and more)", 5, None));
        let e = parse_entry("Rent [5] (Economic) <!-- cluster 0 -->").unwrap();
        assert_eq!((e.label.as_str(), e.size, e.secondary_frame.as_deref()), ("Rent", 5, Some("Economic")));
        assert!(parse_entry("Rent [x] <!-- cluster 0 -->").is_none());
    }

    #[test]
    fn header_survives_quotes() {
        assert_eq!(
            parse_header(r#"<!-- discussion: "a \" model: b" model: "m" -->"#),
            Some(("a \" model: b".into(), "m".into()))
        );
    }
}
