//! Sentence embeddings through a pluggable provider.
//!
//! Providers see batches of sentence units and return one vector per unit.
//! Vectors are passed through as returned; the reduction stage applies the
//! distance metric.

mod file;
mod hashing;
mod http;

use thiserror::Error;

use crate::ingest::SentenceUnit;
use crate::pool::map_bounded;

pub use file::{read_sidecar, write_sidecar, FileProvider};
pub use hashing::HashingProvider;
pub use http::HttpProvider;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("embedding provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("row {row} has dimension {got}, expected {expected}")]
    DimensionMismatch { row: usize, expected: usize, got: usize },
    #[error("provider returned {got} vectors for {expected} inputs")]
    CountMismatch { expected: usize, got: usize },
    #[error("row {0} contains NaN or infinite values")]
    NonFinite(usize),
    #[error("no embedding for sentence {0}")]
    MissingSentence(usize),
    #[error("malformed embedding file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Dense row-major matrix of `f32` vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    dim: usize,
    data: Vec<f32>,
}

impl EmbeddingMatrix {
    pub fn empty(dim: usize) -> Self {
        Self { dim, data: Vec::new() }
    }

    /// Builds a matrix from rows, rejecting ragged or non-finite input.
    pub fn from_rows(rows: Vec<Vec<f32>>) -> Result<Self, EmbedError> {
        let dim = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (row, v) in rows.into_iter().enumerate() {
            if v.len() != dim {
                return Err(EmbedError::DimensionMismatch { row, expected: dim, got: v.len() });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(EmbedError::NonFinite(row));
            }
            data.extend(v);
        }
        Ok(Self { dim, data })
    }

    pub fn from_flat(dim: usize, data: Vec<f32>) -> Result<Self, EmbedError> {
        if dim == 0 && !data.is_empty() || dim > 0 && data.len() % dim != 0 {
            return Err(EmbedError::Format(format!(
                "{} values do not form rows of {dim}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(EmbedError::NonFinite(pos / dim.max(1)));
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.data.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f32]> + '_ {
        (0..self.len()).map(move |i| self.row(i))
    }

    pub fn as_flat(&self) -> &[f32] {
        &self.data
    }

    /// New matrix made of the listed rows, in the listed order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self { dim: self.dim, data }
    }

    /// Appends the rows of `other` below the rows of `self`.
    pub fn vstack(&self, other: &Self) -> Result<Self, EmbedError> {
        if self.is_empty() {
            return Ok(other.clone());
        }
        if other.is_empty() {
            return Ok(self.clone());
        }
        if self.dim != other.dim {
            return Err(EmbedError::DimensionMismatch {
                row: self.len(),
                expected: self.dim,
                got: other.dim,
            });
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Self { dim: self.dim, data })
    }
}

pub trait EmbeddingProvider: Send + Sync {
    /// Identifier of the underlying model, recorded for provenance.
    fn model_id(&self) -> &str;

    fn embed_batch(&self, batch: &[SentenceUnit]) -> Result<Vec<Vec<f32>>, EmbedError>;
}

#[derive(Debug, Clone)]
pub struct EmbedOptions {
    pub batch_size: usize,
    pub max_in_flight: usize,
}

impl Default for EmbedOptions {
    fn default() -> Self {
        Self { batch_size: 64, max_in_flight: 1 }
    }
}

/// Embeds every unit; row `i` of the result belongs to `units[i]`.
pub fn embed_sentences(
    units: &[SentenceUnit],
    provider: &dyn EmbeddingProvider,
    options: &EmbedOptions,
) -> Result<EmbeddingMatrix, EmbedError> {
    if units.is_empty() {
        return Ok(EmbeddingMatrix::empty(0));
    }
    let batches: Vec<&[SentenceUnit]> = units.chunks(options.batch_size.max(1)).collect();
    let results = map_bounded(&batches, options.max_in_flight, |batch| {
        let vectors = provider.embed_batch(batch)?;
        if vectors.len() != batch.len() {
            return Err(EmbedError::CountMismatch { expected: batch.len(), got: vectors.len() });
        }
        Ok(vectors)
    });
    let mut rows = Vec::with_capacity(units.len());
    for batch in results {
        rows.extend(batch?);
    }
    EmbeddingMatrix::from_rows(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ragged_rows_are_rejected() {
        let err = EmbeddingMatrix::from_rows(vec![vec![1.0, 2.0], vec![3.0]]).unwrap_err();
        assert!(matches!(err, EmbedError::DimensionMismatch { row: 1, expected: 2, got: 1 }));
        let err = EmbeddingMatrix::from_rows(vec![vec![f32::NAN]]).unwrap_err();
        assert!(matches!(err, EmbedError::NonFinite(0)));
    }

    #[test]
    fn select_and_vstack() {
        let m = EmbeddingMatrix::from_rows(vec![vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        assert_eq!(m.select(&[2, 0]).as_flat(), [3.0, 1.0]);
        let both = m.vstack(&m.select(&[1])).unwrap();
        assert_eq!(both.as_flat(), [1.0, 2.0, 3.0, 2.0]);
        assert_eq!(EmbeddingMatrix::empty(0).vstack(&m).unwrap(), m);
    }
}
