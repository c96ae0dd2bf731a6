use serde::Deserialize;
use serde_json::json;

use super::{EmbedError, EmbeddingProvider};
use crate::http::{JsonClient, RetryPolicy};
use crate::ingest::SentenceUnit;

pub const BASE_URL_ENV: &str = "EMBED_API_BASE";

/// Embedding service speaking `{"texts":[...]}` → `{"vectors":[[...]]}` at
/// `<base>/embed`.
pub struct HttpProvider {
    url: String,
    model_id: String,
    client: JsonClient,
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f32>>,
}

impl HttpProvider {
    pub fn new(base_url: &str, model_id: impl Into<String>, retry: RetryPolicy) -> Self {
        Self {
            url: format!("{}/embed", base_url.trim_end_matches('/')),
            model_id: model_id.into(),
            client: JsonClient::new(retry),
        }
    }

    /// Reads the base URL from `EMBED_API_BASE`.
    pub fn from_env(model_id: impl Into<String>) -> Result<Self, EmbedError> {
        let base = std::env::var(BASE_URL_ENV)
            .map_err(|_| EmbedError::ProviderUnavailable(format!("{BASE_URL_ENV} is not set")))?;
        Ok(Self::new(&base, model_id, RetryPolicy::default()))
    }

    pub fn url(&self) -> &str {
        &self.url
    }
}

impl EmbeddingProvider for HttpProvider {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn embed_batch(&self, batch: &[SentenceUnit]) -> Result<Vec<Vec<f32>>, EmbedError> {
        let texts: Vec<&str> = batch.iter().map(|u| u.text.as_str()).collect();
        let reply = self
            .client
            .post_json(&self.url, &json!({ "texts": texts, "model": self.model_id }))
            .map_err(|e| EmbedError::ProviderUnavailable(e.to_string()))?;
        let parsed: EmbedResponse = serde_json::from_value(reply)
            .map_err(|e| EmbedError::ProviderUnavailable(format!("bad response: {e}")))?;
        Ok(parsed.vectors)
    }
}
