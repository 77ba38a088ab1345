use std::env;
use std::sync::{Condvar, Mutex, PoisonError};
use std::time::Duration;

use serde_json::{json, Value};

use super::{CompletionRequest, LanguageModel, ProviderError};

pub const ENV_API_KEY: &str = "IVY_LLM_API_KEY";
pub const ENV_BASE_URL: &str = "IVY_LLM_BASE_URL";
pub const ENV_MODEL: &str = "IVY_LLM_MODEL";

#[derive(Debug, Clone, PartialEq)]
pub struct RemoteConfig {
    /// Base of an OpenAI-style API; `/chat/completions` is appended.
    pub base_url: String,
    pub api_key: Option<String>,
    pub model: String,
    pub timeout: Duration,
    pub max_in_flight: usize,
    pub temperature: f64,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        RemoteConfig {
            base_url: "https://api.openai.com/v1".into(),
            api_key: None,
            model: "gpt-3.5-turbo".into(),
            timeout: Duration::from_secs(30),
            max_in_flight: 4,
            temperature: 0.0,
        }
    }
}

impl RemoteConfig {
    /// Defaults overridden by `IVY_LLM_BASE_URL`, `IVY_LLM_API_KEY` and `IVY_LLM_MODEL`.
    pub fn from_env() -> Self {
        let mut c = RemoteConfig::default();
        if let Ok(url) = env::var(ENV_BASE_URL) {
            c.base_url = url;
        }
        c.api_key = env::var(ENV_API_KEY).ok().filter(|k| !k.is_empty());
        if let Ok(model) = env::var(ENV_MODEL) {
            c.model = model;
        }
        c
    }
}

/// Counting semaphore bounding concurrent requests.
#[derive(Debug)]
struct Limiter {
    in_flight: Mutex<usize>,
    freed: Condvar,
    max: usize,
}

struct Permit<'a>(&'a Limiter);

impl Limiter {
    fn acquire(&self) -> Permit<'_> {
        let mut n = self.in_flight.lock().unwrap_or_else(PoisonError::into_inner);
        while *n >= self.max {
            n = self.freed.wait(n).unwrap_or_else(PoisonError::into_inner);
        }
        *n += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.in_flight.lock().unwrap_or_else(PoisonError::into_inner) -= 1;
        self.0.freed.notify_one();
    }
}

/// Chat-completion client. Blocking; call from a worker thread inside async code.
#[derive(Debug)]
pub struct RemoteLanguageModel {
    config: RemoteConfig,
    client: reqwest::blocking::Client,
    limiter: Limiter,
}

impl RemoteLanguageModel {
    pub fn new(config: RemoteConfig) -> Result<Self, ProviderError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .connect_timeout(config.timeout)
            .build()
            .map_err(|e| ProviderError::Unavailable(format!("cannot build HTTP client: {e}")))?;
        let limiter = Limiter { in_flight: Mutex::new(0), freed: Condvar::new(), max: config.max_in_flight.max(1) };
        Ok(RemoteLanguageModel { config, client, limiter })
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'))
    }
}

impl LanguageModel for RemoteLanguageModel {
    fn name(&self) -> &str {
        "remote"
    }

    fn complete(&self, request: &CompletionRequest) -> Result<String, ProviderError> {
        if request.prompt.trim().is_empty() {
            return Err(ProviderError::EmptyPrompt);
        }
        let body = json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": self.config.temperature,
            "max_tokens": request.max_length_hint,
        });
        let _permit = self.limiter.acquire();
        let mut builder = self.client.post(self.endpoint()).json(&body);
        if let Some(key) = &self.config.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = builder.send().map_err(|e| ProviderError::Unavailable(e.to_string()))?;
        let status = response.status();
        if !status.is_success() {
            return Err(ProviderError::Unavailable(format!("endpoint answered HTTP {status}")));
        }
        let payload: Value =
            response.json().map_err(|e| ProviderError::Unavailable(format!("malformed response body: {e}")))?;
        let text = payload
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .ok_or_else(|| ProviderError::Unavailable("response has no choices[0].message.content".into()))?;
        if text.trim().is_empty() {
            return Err(ProviderError::EmptyCompletion);
        }
        Ok(text.trim().to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::time::Instant;

    #[test]
    fn unreachable_endpoint_is_unavailable_within_timeout() {
        let config = RemoteConfig {
            base_url: "http://127.0.0.1:1".into(),
            timeout: Duration::from_secs(2),
            ..RemoteConfig::default()
        };
        let llm = RemoteLanguageModel::new(config).unwrap();
        let start = Instant::now();
        let err = llm.complete(&CompletionRequest::new("hello")).unwrap_err();
        assert!(matches!(err, ProviderError::Unavailable(_)), "{err:?}");
        assert!(start.elapsed() < Duration::from_secs(3));
    }

    #[test]
    fn limiter_never_exceeds_max() {
        use std::sync::atomic::{AtomicUsize, Ordering};
        use std::sync::Arc;
        let limiter = Arc::new(Limiter { in_flight: Mutex::new(0), freed: Condvar::new(), max: 2 });
        let peak = Arc::new(AtomicUsize::new(0));
        let current = Arc::new(AtomicUsize::new(0));
        let handles: Vec<_> = (0..8)
            .map(|_| {
                let (limiter, peak, current) = (limiter.clone(), peak.clone(), current.clone());
                std::thread::spawn(move || {
                    let _p = limiter.acquire();
                    let now = current.fetch_add(1, Ordering::SeqCst) + 1;
                    peak.fetch_max(now, Ordering::SeqCst);
                    std::thread::sleep(Duration::from_millis(10));
                    current.fetch_sub(1, Ordering::SeqCst);
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
        assert!(peak.load(Ordering::SeqCst) <= 2);
    }
}
