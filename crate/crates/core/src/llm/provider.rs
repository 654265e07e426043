use std::collections::VecDeque;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use once_cell::sync::Lazy;
use regex::Regex;

use crate::llm::{CompletionRequest, LlmError};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProviderResponse {
    pub text: String,
    pub usage: Option<Usage>,
}

impl ProviderResponse {
    pub fn text(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            usage: None,
        }
    }
}

/// A chat-completion backend. Remote APIs and local models implement the same
/// trait; the client adds caching, retries and the concurrency bound.
pub trait Provider: Send + Sync {
    fn id(&self) -> String;
    fn complete(&self, request: &CompletionRequest) -> Result<ProviderResponse, LlmError>;
}

/// Returns the same text for every request.
#[derive(Debug)]
pub struct FixedProvider {
    text: String,
    calls: AtomicUsize,
}

impl FixedProvider {
    pub fn new(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl Provider for FixedProvider {
    fn id(&self) -> String {
        "fixed".into()
    }

    fn complete(&self, _: &CompletionRequest) -> Result<ProviderResponse, LlmError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        Ok(ProviderResponse::text(self.text.clone()))
    }
}

/// Replays a queue of outcomes in order, then keeps returning `fallback`.
/// Every prompt it receives is recorded.
#[derive(Debug)]
pub struct ScriptedProvider {
    script: Mutex<VecDeque<Result<String, LlmError>>>,
    fallback: Option<String>,
    prompts: Mutex<Vec<String>>,
}

impl ScriptedProvider {
    pub fn new(script: impl IntoIterator<Item = Result<String, LlmError>>) -> Self {
        Self {
            script: Mutex::new(script.into_iter().collect()),
            fallback: None,
            prompts: Mutex::new(Vec::new()),
        }
    }

    pub fn with_fallback(mut self, text: impl Into<String>) -> Self {
        self.fallback = Some(text.into());
        self
    }

    pub fn prompts(&self) -> Vec<String> {
        self.prompts.lock().unwrap().clone()
    }

    pub fn calls(&self) -> usize {
        self.prompts.lock().unwrap().len()
    }
}

impl Provider for ScriptedProvider {
    fn id(&self) -> String {
        "scripted".into()
    }

    fn complete(&self, request: &CompletionRequest) -> Result<ProviderResponse, LlmError> {
        self.prompts.lock().unwrap().push(request.rendered_prompt.clone());
        match self.script.lock().unwrap().pop_front() {
            Some(r) => r.map(ProviderResponse::text),
            None => self
                .fallback
                .clone()
                .map(ProviderResponse::text)
                .ok_or_else(|| LlmError::Provider("script exhausted".into())),
        }
    }
}

static SPAN_LINE: Lazy<Regex> = Lazy::new(|| Regex::new(r#"(?m)^Disclosure Span to Revise: "(.*)"$"#).unwrap());
static EXAMPLES_LINE: Lazy<Regex> = Lazy::new(|| Regex::new(r"(?m)^Example Generalizations: (.*)$").unwrap());
static NUMBER: Lazy<Regex> = Lazy::new(|| Regex::new(r"\d+(?:[.,]\d+)*").unwrap());

const GENERIC: [&str; 6] = [
    "some personal details",
    "a few things about me",
    "something personal",
    "certain details",
    "a personal matter",
    "some aspects of my life",
];

/// Deterministic offline stand-in for a real model, for demos and smoke tests.
/// It recognizes the bundled prompt layouts and answers in the expected format
/// with deliberately generic content.
#[derive(Debug, Default)]
pub struct OfflineProvider;

impl OfflineProvider {
    fn candidates(prompt: &str, n: usize, avoid: &str) -> Vec<String> {
        let span = SPAN_LINE
            .captures_iter(prompt)
            .last()
            .map(|c| c[1].to_string())
            .unwrap_or_default();
        let mut pool = Vec::new();
        if NUMBER.is_match(&span) {
            pool.push(NUMBER.replace_all(&span, "some").into_owned());
        }
        pool.extend(GENERIC.iter().map(|s| s.to_string()));
        pool.retain(|c| !c.eq_ignore_ascii_case(&span) && !avoid.contains(&format!("\"{c}\"")));
        pool.truncate(n);
        pool
    }
}

impl Provider for OfflineProvider {
    fn id(&self) -> String {
        "offline".into()
    }

    fn complete(&self, request: &CompletionRequest) -> Result<ProviderResponse, LlmError> {
        let p = &request.rendered_prompt;
        let thought = p.trim_end().ends_with("Rationale:");
        let text = if p.contains("{\"Thought\": \"xxx\"}") {
            r#"{"Thought": "The span adds context but the message stands without its specifics."}"#.to_string()
        } else if p.contains("Rate the importance of the disclosure span") {
            if p.contains("{\"Importance\"") {
                r#"The span adds context without being central to the message. {"Importance": "Moderate"}"#.to_string()
            } else {
                "Moderate".to_string()
            }
        } else if p.contains("{\"span 1\": \"xxx\"") {
            let c = Self::candidates(p, 3, "");
            let json = serde_json::json!({"span 1": c[0], "span 2": c[1], "span 3": c[2]});
            if thought {
                format!("The span is more specific than the message needs. Generalized Spans: {json}")
            } else {
                json.to_string()
            }
        } else if SPAN_LINE.is_match(p) {
            let avoid = EXAMPLES_LINE.captures(p).map(|c| c[1].to_string()).unwrap_or_default();
            let c = Self::candidates(p, 1, &avoid).pop().unwrap_or_else(|| "something".into());
            if thought {
                format!("The span is more specific than the message needs.\nGeneralized Span: {c}")
            } else {
                c
            }
        } else {
            return Err(LlmError::Provider("offline provider does not recognize this prompt".into()));
        };
        Ok(ProviderResponse::text(text))
    }
}
