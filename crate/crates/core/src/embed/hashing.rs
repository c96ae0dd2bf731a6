use super::{EmbedError, EmbeddingProvider};
use crate::ingest::SentenceUnit;

const STOPWORDS: &[&str] = &[
    "a", "an", "and", "are", "as", "at", "be", "been", "but", "by", "can", "do", "does", "for",
    "from", "had", "has", "have", "he", "her", "his", "i", "if", "in", "is", "it", "its", "just",
    "me", "my", "not", "of", "on", "or", "our", "she", "so", "that", "the", "their", "them",
    "there", "they", "this", "to", "was", "we", "were", "what", "which", "who", "will", "with",
    "would", "you", "your",
];

/// Offline signed feature-hashing embedder over word unigrams and bigrams.
///
/// Useful for running the pipeline without an embedding service; vectors are
/// unit length and purely lexical.
#[derive(Debug, Clone)]
pub struct HashingProvider {
    dim: usize,
    model_id: String,
}

impl HashingProvider {
    pub fn new(dim: usize) -> Self {
        let dim = dim.max(8);
        Self { dim, model_id: format!("hashing-bow-{dim}") }
    }

    pub fn embed_text(&self, text: &str) -> Vec<f32> {
        let lowered = text.to_lowercase();
        let all: Vec<&str> = lowered
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .collect();
        let content: Vec<&str> = all.iter().copied().filter(|t| !STOPWORDS.contains(t)).collect();
        let tokens = if content.is_empty() { &all } else { &content };

        let mut v = vec![0f32; self.dim];
        for t in tokens {
            self.add_feature(&mut v, t.as_bytes(), 1.0);
        }
        for pair in tokens.windows(2) {
            let joined = format!("{} {}", pair[0], pair[1]);
            self.add_feature(&mut v, joined.as_bytes(), 0.5);
        }
        if tokens.is_empty() {
            self.add_feature(&mut v, lowered.trim().as_bytes(), 1.0);
        }
        let norm = v.iter().map(|x| x * x).sum::<f32>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }

    fn add_feature(&self, v: &mut [f32], feature: &[u8], weight: f32) {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in feature {
            h ^= u64::from(*b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        let h = crate::seed::splitmix64(h);
        let slot = (h % self.dim as u64) as usize;
        let sign = if h >> 63 == 1 { -1.0 } else { 1.0 };
        v[slot] += sign * weight;
    }
}

impl Default for HashingProvider {
    fn default() -> Self {
        Self::new(256)
    }
}

impl EmbeddingProvider for HashingProvider {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn embed_batch(&self, batch: &[SentenceUnit]) -> Result<Vec<Vec<f32>>, EmbedError> {
        Ok(batch.iter().map(|u| self.embed_text(&u.text)).collect())
    }
}
