use std::time::Duration;

use serde_json::{json, Value};

use crate::llm::{CompletionRequest, LlmError, Provider, ProviderResponse, Usage};

pub const API_KEY_ENV: &str = "PROVIDER_API_KEY";
pub const BASE_URL_ENV: &str = "PROVIDER_BASE_URL";
pub const DEFAULT_BASE_URL: &str = "https://api.openai.com/v1";

/// OpenAI-compatible `POST {base}/chat/completions` provider.
pub struct HttpProvider {
    client: reqwest::blocking::Client,
    base_url: String,
    api_key: String,
}

impl HttpProvider {
    pub fn new(base_url: impl Into<String>, api_key: impl Into<String>, timeout: Duration) -> Result<Self, LlmError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| LlmError::Provider(e.to_string()))?;
        Ok(Self {
            client,
            base_url: base_url.into().trim_end_matches('/').to_string(),
            api_key: api_key.into(),
        })
    }

    /// Reads `PROVIDER_API_KEY` and optionally `PROVIDER_BASE_URL`.
    pub fn from_env() -> Result<Self, LlmError> {
        let key = std::env::var(API_KEY_ENV).map_err(|_| LlmError::Auth(format!("{API_KEY_ENV} is not set")))?;
        let base = std::env::var(BASE_URL_ENV).unwrap_or_else(|_| DEFAULT_BASE_URL.to_string());
        Self::new(base, key, Duration::from_secs(120))
    }
}

impl Provider for HttpProvider {
    fn id(&self) -> String {
        format!("http:{}", self.base_url)
    }

    fn complete(&self, request: &CompletionRequest) -> Result<ProviderResponse, LlmError> {
        let body = json!({
            "model": request.params.model_id,
            "messages": [{"role": "user", "content": request.rendered_prompt}],
            "temperature": request.params.temperature,
            "max_tokens": request.params.max_tokens,
        });
        let resp = self
            .client
            .post(format!("{}/chat/completions", self.base_url))
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| {
                if e.is_timeout() {
                    LlmError::Timeout(e.to_string())
                } else {
                    LlmError::Provider(e.to_string())
                }
            })?;
        let status = resp.status();
        let text = resp.text().map_err(|e| LlmError::Provider(e.to_string()))?;
        match status.as_u16() {
            200..=299 => {}
            401 | 403 => return Err(LlmError::Auth(format!("status {status}"))),
            429 => return Err(LlmError::RateLimit(format!("status {status}"))),
            408 | 504 => return Err(LlmError::Timeout(format!("status {status}"))),
            500..=599 => return Err(LlmError::Server(format!("status {status}"))),
            _ => return Err(LlmError::Provider(format!("status {status}: {text}"))),
        }
        let v: Value = serde_json::from_str(&text).map_err(|e| LlmError::Provider(format!("bad response body: {e}")))?;
        let content = v["choices"][0]["message"]["content"]
            .as_str()
            .ok_or_else(|| LlmError::Provider("response has no choices[0].message.content".into()))?;
        let usage = v.get("usage").map(|u| Usage {
            prompt_tokens: u["prompt_tokens"].as_u64().unwrap_or(0),
            completion_tokens: u["completion_tokens"].as_u64().unwrap_or(0),
        });
        Ok(ProviderResponse {
            text: content.to_string(),
            usage,
        })
    }
}
