//! Provider-agnostic completion client: request shaping, caching, retries with
//! backoff, and a bound on outstanding provider calls.

mod cache;
#[cfg(feature = "http-provider")]
mod http;
mod provider;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cache::{cache_key, ResponseCache};
#[cfg(feature = "http-provider")]
pub use http::{HttpProvider, API_KEY_ENV, BASE_URL_ENV, DEFAULT_BASE_URL};
pub use provider::{FixedProvider, OfflineProvider, Provider, ProviderResponse, ScriptedProvider, Usage};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LlmError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("rate limited: {0}")]
    RateLimit(String),
    #[error("timed out: {0}")]
    Timeout(String),
    #[error("provider unavailable: {0}")]
    Server(String),
    #[error("provider error: {0}")]
    Provider(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("cache error: {0}")]
    Cache(String),
    #[error("gave up after {attempts} attempts: {last}")]
    Exhausted { attempts: u32, last: Box<LlmError> },
}

impl LlmError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, LlmError::RateLimit(_) | LlmError::Timeout(_) | LlmError::Server(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionParams {
    pub temperature: f64,
    pub max_tokens: u32,
    pub model_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub template_id: String,
    pub rendered_prompt: String,
    pub params: CompletionParams,
}

impl CompletionRequest {
    pub fn new(template_id: impl Into<String>, rendered_prompt: impl Into<String>, params: CompletionParams) -> Self {
        Self {
            template_id: template_id.into(),
            rendered_prompt: rendered_prompt.into(),
            params,
        }
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if self.rendered_prompt.is_empty() {
            return Err(LlmError::InvalidRequest("empty prompt".into()));
        }
        let t = self.params.temperature;
        if !(0.0..=2.0).contains(&t) {
            return Err(LlmError::InvalidRequest(format!("temperature {t} outside [0, 2]")));
        }
        if self.params.max_tokens == 0 {
            return Err(LlmError::InvalidRequest("max_tokens must be positive".into()));
        }
        Ok(())
    }
}

/// How a request interacts with the response cache.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CachePolicy {
    /// Read and write only for temperature 0.
    #[default]
    Default,
    /// Read and write at any temperature.
    Replay,
    /// Skip the read, then overwrite the entry.
    Refresh,
    /// Neither read nor write.
    Bypass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 3,
            base_delay: Duration::from_millis(500),
            max_delay: Duration::from_secs(8),
        }
    }
}

impl RetryPolicy {
    pub fn no_delay() -> Self {
        Self {
            base_delay: Duration::ZERO,
            max_delay: Duration::ZERO,
            ..Self::default()
        }
    }

    /// Delay before retry number `retry` (1-based), doubling each time.
    pub fn delay(&self, retry: u32) -> Duration {
        self.base_delay
            .saturating_mul(1u32 << (retry.saturating_sub(1)).min(16))
            .min(self.max_delay)
    }
}

/// Counting semaphore that also records the highest concurrent occupancy.
#[derive(Debug)]
struct Semaphore {
    state: Mutex<(usize, usize)>,
    cv: Condvar,
    permits: usize,
}

struct Permit<'a>(&'a Semaphore);

impl Semaphore {
    fn new(permits: usize) -> Self {
        Self {
            state: Mutex::new((0, 0)),
            cv: Condvar::new(),
            permits: permits.max(1),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut s = self.state.lock().unwrap();
        while s.0 >= self.permits {
            s = self.cv.wait(s).unwrap();
        }
        s.0 += 1;
        s.1 = s.1.max(s.0);
        Permit(self)
    }

    fn peak(&self) -> usize {
        self.state.lock().unwrap().1
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        self.0.state.lock().unwrap().0 -= 1;
        self.0.cv.notify_one();
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmConfig {
    pub model_id: String,
    pub max_concurrency: usize,
    pub cache_dir: Option<std::path::PathBuf>,
    pub log_prompts: bool,
    pub max_tokens: u32,
    /// `offline` or `http`.
    pub provider: String,
}

impl Default for LlmConfig {
    fn default() -> Self {
        Self {
            model_id: "gpt-4".into(),
            max_concurrency: 4,
            cache_dir: None,
            log_prompts: false,
            max_tokens: 512,
            provider: "offline".into(),
        }
    }
}

/// Thread-safe completion facade shared by the abstraction and rating code.
pub struct LlmClient {
    provider: Arc<dyn Provider>,
    cache: ResponseCache,
    semaphore: Semaphore,
    retry: RetryPolicy,
    model_id: String,
    max_tokens: u32,
    log_prompts: bool,
    provider_calls: AtomicUsize,
}

impl LlmClient {
    pub fn new(provider: Arc<dyn Provider>, model_id: impl Into<String>) -> Self {
        Self {
            provider,
            cache: ResponseCache::in_memory(),
            semaphore: Semaphore::new(4),
            retry: RetryPolicy::default(),
            model_id: model_id.into(),
            max_tokens: 512,
            log_prompts: false,
            provider_calls: AtomicUsize::new(0),
        }
    }

    pub fn from_config(provider: Arc<dyn Provider>, cfg: &LlmConfig) -> Result<Self, LlmError> {
        let cache = match &cfg.cache_dir {
            Some(dir) => ResponseCache::with_dir(dir)?,
            None => ResponseCache::in_memory(),
        };
        Ok(Self::new(provider, cfg.model_id.clone())
            .with_cache(cache)
            .with_max_concurrency(cfg.max_concurrency)
            .with_max_tokens(cfg.max_tokens)
            .with_prompt_logging(cfg.log_prompts))
    }

    /// Builds the provider named in `cfg.provider`.
    pub fn provider_from_config(cfg: &LlmConfig) -> Result<Arc<dyn Provider>, LlmError> {
        match cfg.provider.as_str() {
            "offline" => Ok(Arc::new(OfflineProvider)),
            #[cfg(feature = "http-provider")]
            "http" => Ok(Arc::new(HttpProvider::from_env()?)),
            other => Err(LlmError::InvalidRequest(format!("unknown provider `{other}`"))),
        }
    }

    pub fn with_cache(mut self, cache: ResponseCache) -> Self {
        self.cache = cache;
        self
    }

    pub fn with_max_concurrency(mut self, k: usize) -> Self {
        self.semaphore = Semaphore::new(k);
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_max_tokens(mut self, max_tokens: u32) -> Self {
        self.max_tokens = max_tokens;
        self
    }

    pub fn with_prompt_logging(mut self, on: bool) -> Self {
        self.log_prompts = on;
        self
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn provider_id(&self) -> String {
        self.provider.id()
    }

    /// Provider invocations so far, including failed attempts.
    pub fn provider_calls(&self) -> usize {
        self.provider_calls.load(Ordering::SeqCst)
    }

    /// Highest number of simultaneous provider calls observed.
    pub fn peak_concurrency(&self) -> usize {
        self.semaphore.peak()
    }

    pub fn cache(&self) -> &ResponseCache {
        &self.cache
    }

    /// A request with this client's model and token limit.
    pub fn request(&self, template_id: &str, prompt: impl Into<String>, temperature: f64) -> CompletionRequest {
        CompletionRequest::new(
            template_id,
            prompt,
            CompletionParams {
                temperature,
                max_tokens: self.max_tokens,
                model_id: self.model_id.clone(),
            },
        )
    }

    pub fn complete(&self, req: &CompletionRequest, policy: CachePolicy) -> Result<String, LlmError> {
        req.validate()?;
        let key = cache_key(req);
        let deterministic = req.params.temperature == 0.0;
        let read = match policy {
            CachePolicy::Default => deterministic,
            CachePolicy::Replay => true,
            CachePolicy::Refresh | CachePolicy::Bypass => false,
        };
        let write = match policy {
            CachePolicy::Default => deterministic,
            CachePolicy::Replay | CachePolicy::Refresh => true,
            CachePolicy::Bypass => false,
        };
        if read {
            if let Some(text) = self.cache.get(&key) {
                log::debug!(
                    "llm cache hit template={} model={} key={}",
                    req.template_id,
                    req.params.model_id,
                    &key[..12]
                );
                return Ok(text);
            }
        }

        let mut attempt = 0u32;
        let response = loop {
            attempt += 1;
            let started = Instant::now();
            let result = {
                let _permit = self.semaphore.acquire();
                self.provider_calls.fetch_add(1, Ordering::SeqCst);
                self.provider.complete(req)
            };
            match result {
                Ok(r) => {
                    self.log_exchange(req, &r, started.elapsed());
                    break r;
                }
                Err(e) if e.is_retryable() && attempt <= self.retry.max_retries => {
                    let delay = self.retry.delay(attempt);
                    log::warn!(
                        "llm attempt {attempt} failed template={}: {e}; retrying in {delay:?}",
                        req.template_id
                    );
                    std::thread::sleep(delay);
                }
                Err(e) if e.is_retryable() => {
                    return Err(LlmError::Exhausted {
                        attempts: attempt,
                        last: Box::new(e),
                    })
                }
                Err(e) => return Err(e),
            }
        };
        if write {
            self.cache.put(&key, req, &response.text, policy == CachePolicy::Refresh)?;
        }
        Ok(response.text)
    }

    fn log_exchange(&self, req: &CompletionRequest, resp: &ProviderResponse, elapsed: Duration) {
        let (pt, ct) = match &resp.usage {
            Some(u) => (u.prompt_tokens, u.completion_tokens),
            None => (
                req.rendered_prompt.split_whitespace().count() as u64,
                resp.text.split_whitespace().count() as u64,
            ),
        };
        if self.log_prompts {
            log::info!(
                "llm template={} model={} prompt_tokens={pt} completion_tokens={ct} elapsed={elapsed:?} prompt={:?} response={:?}",
                req.template_id,
                req.params.model_id,
                req.rendered_prompt,
                resp.text
            );
        } else {
            log::info!(
                "llm template={} model={} prompt_tokens={pt} completion_tokens={ct} elapsed={elapsed:?} prompt=<redacted> response=<redacted>",
                req.template_id,
                req.params.model_id
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::thread;

    fn client(p: Arc<dyn Provider>) -> LlmClient {
        LlmClient::new(p, "m").with_retry(RetryPolicy::no_delay())
    }

    #[test]
    fn temperature_zero_is_cached() {
        let p = Arc::new(FixedProvider::new("out"));
        let c = client(p.clone());
        let r = c.request("t", "prompt", 0.0);
        assert_eq!(c.complete(&r, CachePolicy::Default).unwrap(), "out");
        assert_eq!(c.complete(&r, CachePolicy::Default).unwrap(), "out");
        assert_eq!(p.calls(), 1);
    }

    #[test]
    fn sampling_is_cached_only_on_replay() {
        let p = Arc::new(FixedProvider::new("out"));
        let c = client(p.clone());
        let r = c.request("t", "prompt", 0.7);
        c.complete(&r, CachePolicy::Default).unwrap();
        c.complete(&r, CachePolicy::Default).unwrap();
        assert_eq!(p.calls(), 2);
        c.complete(&r, CachePolicy::Replay).unwrap();
        c.complete(&r, CachePolicy::Replay).unwrap();
        assert_eq!(p.calls(), 3);
    }

    #[test]
    fn refresh_and_bypass_skip_reads() {
        let p = Arc::new(ScriptedProvider::new([Ok("a".to_string()), Ok("b".to_string()), Ok("c".to_string())]));
        let c = client(p.clone());
        let r = c.request("t", "prompt", 0.0);
        assert_eq!(c.complete(&r, CachePolicy::Default).unwrap(), "a");
        assert_eq!(c.complete(&r, CachePolicy::Refresh).unwrap(), "b");
        assert_eq!(c.complete(&r, CachePolicy::Default).unwrap(), "b");
        assert_eq!(c.complete(&r, CachePolicy::Bypass).unwrap(), "c");
        assert_eq!(c.complete(&r, CachePolicy::Default).unwrap(), "b");
    }

    #[test]
    fn distinct_models_are_distinct_entries() {
        let p = Arc::new(FixedProvider::new("out"));
        let c = client(p.clone());
        let mut r = c.request("t", "prompt", 0.0);
        c.complete(&r, CachePolicy::Default).unwrap();
        r.params.model_id = "other".into();
        c.complete(&r, CachePolicy::Default).unwrap();
        assert_eq!(p.calls(), 2);
    }

    #[test]
    fn rate_limit_twice_then_success() {
        let p = Arc::new(ScriptedProvider::new([
            Err(LlmError::RateLimit("slow down".into())),
            Err(LlmError::RateLimit("slow down".into())),
            Ok("ok".to_string()),
        ]));
        let c = client(p.clone());
        assert_eq!(c.complete(&c.request("t", "p", 0.0), CachePolicy::Default).unwrap(), "ok");
        assert_eq!(p.calls(), 3);
    }

    #[test]
    fn retries_are_bounded() {
        let p = Arc::new(ScriptedProvider::new((0..10).map(|_| Err(LlmError::Timeout("t".into())))));
        let c = client(p.clone());
        let err = c.complete(&c.request("t", "p", 0.0), CachePolicy::Default).unwrap_err();
        assert!(matches!(err, LlmError::Exhausted { attempts: 4, .. }));
        assert_eq!(p.calls(), 4);
    }

    #[test]
    fn auth_is_not_retried() {
        let p = Arc::new(ScriptedProvider::new([Err(LlmError::Auth("bad key".into())), Ok("ok".to_string())]));
        let c = client(p.clone());
        assert!(matches!(
            c.complete(&c.request("t", "p", 0.0), CachePolicy::Default),
            Err(LlmError::Auth(_))
        ));
        assert_eq!(p.calls(), 1);
    }

    #[test]
    fn request_validation() {
        let c = client(Arc::new(FixedProvider::new("x")));
        assert!(c.complete(&c.request("t", "", 0.0), CachePolicy::Default).is_err());
        assert!(c.complete(&c.request("t", "p", 2.5), CachePolicy::Default).is_err());
        assert!(c.complete(&c.request("t", "p", 2.0), CachePolicy::Default).is_ok());
    }

    #[test]
    fn backoff_doubles_and_caps() {
        let r = RetryPolicy::default();
        assert_eq!(r.delay(1), Duration::from_millis(500));
        assert_eq!(r.delay(2), Duration::from_millis(1000));
        assert_eq!(r.delay(3), Duration::from_millis(2000));
        assert_eq!(r.delay(10), Duration::from_secs(8));
    }

    struct Slow;
    impl Provider for Slow {
        fn id(&self) -> String {
            "slow".into()
        }
        fn complete(&self, _: &CompletionRequest) -> Result<ProviderResponse, LlmError> {
            thread::sleep(Duration::from_millis(20));
            Ok(ProviderResponse::text("x"))
        }
    }

    #[test]
    fn outstanding_calls_are_bounded() {
        let c = Arc::new(client(Arc::new(Slow)).with_max_concurrency(2));
        let handles: Vec<_> = (0..8)
            .map(|i| {
                let c = c.clone();
                thread::spawn(move || c.complete(&c.request("t", format!("p{i}"), 0.0), CachePolicy::Bypass))
            })
            .collect();
        for h in handles {
            h.join().unwrap().unwrap();
        }
        assert!(c.peak_concurrency() <= 2);
        assert_eq!(c.provider_calls(), 8);
    }
}
