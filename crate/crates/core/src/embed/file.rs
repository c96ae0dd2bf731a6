use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{EmbedError, EmbeddingMatrix, EmbeddingProvider};
use crate::ingest::SentenceUnit;

/// Parses a sidecar file into `(sentence_id, vector)` pairs in file order.
pub fn read_sidecar(raw: &str) -> Result<(usize, Vec<(usize, Vec<f32>)>), EmbedError> {
    let mut lines = raw.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| EmbedError::Format("missing header".into()))?;
    let mut dim = None;
    let mut count = None;
    for field in header.split_whitespace() {
        match field.split_once('=') {
            Some(("dim", v)) => dim = v.parse::<usize>().ok(),
            Some(("count", v)) => count = v.parse::<usize>().ok(),
            _ => return Err(EmbedError::Format(format!("bad header field `{field}`"))),
        }
    }
    let (dim, count) = dim
        .zip(count)
        .ok_or_else(|| EmbedError::Format("header needs dim=<d> count=<n>".into()))?;

    let mut rows = Vec::with_capacity(count);
    for (row, line) in lines.enumerate() {
        let mut fields = line.split_whitespace();
        let id = fields
            .next()
            .and_then(|f| f.parse::<usize>().ok())
            .ok_or_else(|| EmbedError::Format(format!("line {}: bad sentence id", row + 2)))?;
        let vector = fields
            .map(str::parse::<f32>)
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| EmbedError::Format(format!("line {}: {e}", row + 2)))?;
        if vector.len() != dim {
            return Err(EmbedError::DimensionMismatch { row, expected: dim, got: vector.len() });
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(EmbedError::NonFinite(row));
        }
        rows.push((id, vector));
    }
    if rows.len() != count {
        return Err(EmbedError::Format(format!(
            "header says {count} rows, found {}",
            rows.len()
        )));
    }
    Ok((dim, rows))
}

/// Serializes a matrix whose row `i` belongs to sentence `i`.
pub fn write_sidecar(matrix: &EmbeddingMatrix) -> String {
    let mut out = format!("dim={} count={}\n", matrix.dim(), matrix.len());
    for (i, row) in matrix.rows().enumerate() {
        out.push_str(&i.to_string());
        for x in row {
            // `{:?}` prints the shortest representation that round-trips.
            let _ = write!(out, " {x:?}");
        }
        out.push('\n');
    }
    out
}

/// Serves precomputed vectors looked up by sentence id.
#[derive(Debug, Clone)]
pub struct FileProvider {
    model_id: String,
    dim: usize,
    vectors: HashMap<usize, Vec<f32>>,
}

impl FileProvider {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, EmbedError> {
        let path = path.as_ref();
        let raw = std::fs::read_to_string(path).map_err(|e| {
            EmbedError::ProviderUnavailable(format!("{}: {e}", path.display()))
        })?;
        Self::from_sidecar(&raw, format!("file:{}", path.display()))
    }

    pub fn from_sidecar(raw: &str, model_id: impl Into<String>) -> Result<Self, EmbedError> {
        let (dim, rows) = read_sidecar(raw)?;
        Ok(Self {
            model_id: model_id.into(),
            dim,
            vectors: rows.into_iter().collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

impl EmbeddingProvider for FileProvider {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn embed_batch(&self, batch: &[SentenceUnit]) -> Result<Vec<Vec<f32>>, EmbedError> {
        batch
            .iter()
            .map(|u| {
                self.vectors
                    .get(&u.sentence_id)
                    .cloned()
                    .ok_or(EmbedError::MissingSentence(u.sentence_id))
            })
            .collect()
    }
}
