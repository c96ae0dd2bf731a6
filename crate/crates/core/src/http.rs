//! Blocking JSON-over-HTTP client with bounded retry and a token bucket,
//! shared by the embedding and completion backends.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HttpError {
    #[error("endpoint unreachable: {0}")]
    Unavailable(String),
    #[error("rate limited after {attempts} attempts")]
    RateLimited { attempts: u32 },
    #[error("HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("invalid response body: {0}")]
    Body(String),
    #[error("total timeout of {0:?} exceeded")]
    Timeout(Duration),
}

#[derive(Debug, Clone)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub initial_backoff: Duration,
    pub max_backoff: Duration,
    /// Deadline across all attempts of one call, including backoff sleeps.
    pub total_timeout: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 4,
            initial_backoff: Duration::from_millis(500),
            max_backoff: Duration::from_secs(8),
            total_timeout: Duration::from_secs(120),
        }
    }
}

impl RetryPolicy {
    /// Sleep before retry number `attempt` (1-based).
    pub fn backoff(&self, attempt: u32) -> Duration {
        let factor = 1u32.checked_shl(attempt.saturating_sub(1)).unwrap_or(u32::MAX);
        self.initial_backoff
            .saturating_mul(factor)
            .min(self.max_backoff)
    }
}

/// Classic token bucket: `capacity` burst, refilled at `per_second`.
#[derive(Debug)]
pub struct TokenBucket {
    capacity: f64,
    per_second: f64,
    state: Mutex<(f64, Instant)>,
}

impl TokenBucket {
    pub fn new(capacity: u32, per_second: f64) -> Self {
        let capacity = f64::from(capacity.max(1));
        Self {
            capacity,
            per_second,
            state: Mutex::new((capacity, Instant::now())),
        }
    }

    /// Takes one token, returning how long the caller must wait first.
    pub fn reserve(&self) -> Duration {
        let mut state = self.state.lock().expect("token bucket poisoned");
        let now = Instant::now();
        let (tokens, last) = *state;
        let refilled = (tokens + now.duration_since(last).as_secs_f64() * self.per_second)
            .min(self.capacity);
        let after = refilled - 1.0;
        *state = (after, now);
        if after >= 0.0 || self.per_second <= 0.0 {
            Duration::ZERO
        } else {
            Duration::from_secs_f64(-after / self.per_second)
        }
    }

    pub fn acquire(&self) {
        let wait = self.reserve();
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
    }
}

pub struct JsonClient {
    agent: ureq::Agent,
    retry: RetryPolicy,
    bucket: Option<TokenBucket>,
    bearer: Option<String>,
}

impl JsonClient {
    pub fn new(retry: RetryPolicy) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(retry.total_timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            agent,
            retry,
            bucket: None,
            bearer: None,
        }
    }

    pub fn with_rate_limit(mut self, bucket: TokenBucket) -> Self {
        self.bucket = Some(bucket);
        self
    }

    pub fn with_bearer(mut self, token: Option<String>) -> Self {
        self.bearer = token.filter(|t| !t.is_empty());
        self
    }

    /// POSTs `body` and parses the JSON reply. Retries transport failures,
    /// 429 and 5xx responses with exponential backoff.
    pub fn post_json(&self, url: &str, body: &impl Serialize) -> Result<Value, HttpError> {
        let started = Instant::now();
        let mut last_error = HttpError::Unavailable("no attempt made".into());
        for attempt in 1..=self.retry.max_attempts.max(1) {
            if attempt > 1 {
                let pause = self.retry.backoff(attempt - 1);
                if started.elapsed() + pause >= self.retry.total_timeout {
                    return Err(HttpError::Timeout(self.retry.total_timeout));
                }
                std::thread::sleep(pause);
            }
            if let Some(bucket) = &self.bucket {
                bucket.acquire();
            }
            let mut request = self.agent.post(url);
            if let Some(token) = &self.bearer {
                request = request.header("Authorization", format!("Bearer {token}"));
            }
            match request.send_json(body) {
                Ok(mut response) => {
                    let status = response.status().as_u16();
                    if status == 429 {
                        last_error = HttpError::RateLimited { attempts: attempt };
                        continue;
                    }
                    let text = response
                        .body_mut()
                        .read_to_string()
                        .map_err(|e| HttpError::Body(e.to_string()))?;
                    if status >= 500 {
                        last_error = HttpError::Status { status, body: text };
                        continue;
                    }
                    if status >= 400 {
                        return Err(HttpError::Status { status, body: text });
                    }
                    return serde_json::from_str(&text).map_err(|e| HttpError::Body(e.to_string()));
                }
                Err(ureq::Error::Timeout(_)) => {
                    return Err(HttpError::Timeout(self.retry.total_timeout));
                }
                Err(e) => last_error = HttpError::Unavailable(e.to_string()),
            }
        }
        Err(last_error)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backoff_doubles_up_to_cap() {
        let p = RetryPolicy {
            max_attempts: 10,
            initial_backoff: Duration::from_millis(100),
            max_backoff: Duration::from_millis(700),
            total_timeout: Duration::from_secs(5),
        };
        let waits: Vec<_> = (1..=5).map(|a| p.backoff(a).as_millis()).collect();
        assert_eq!(waits, [100, 200, 400, 700, 700]);
    }

    #[test]
    fn bucket_allows_burst_then_throttles() {
        let bucket = TokenBucket::new(2, 10.0);
        assert!(bucket.reserve().is_zero());
        assert!(bucket.reserve().is_zero());
        let wait = bucket.reserve();
        assert!(wait > Duration::from_millis(50) && wait <= Duration::from_millis(100));
    }

    #[test]
    fn unreachable_endpoint_fails_within_deadline() {
        let client = JsonClient::new(RetryPolicy {
            max_attempts: 2,
            initial_backoff: Duration::from_millis(10),
            max_backoff: Duration::from_millis(10),
            total_timeout: Duration::from_secs(5),
        });
        let started = Instant::now();
        let err = client
            .post_json("http://127.0.0.1:9/none", &serde_json::json!({}))
            .unwrap_err();
        assert!(matches!(err, HttpError::Unavailable(_) | HttpError::Timeout(_)));
        assert!(started.elapsed() < Duration::from_secs(6));
    }
}
