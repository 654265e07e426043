//! HTTP+JSON API over detection, rating, abstraction and edit application.
//!
//! Text always travels in the request; nothing is stored between requests.

mod schema;

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Query, Request, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::cors::{AllowOrigin, CorsLayer};

use disclose_core::abstraction::{
    generate_abstractions, AbstractError, AbstractionSet, GenerateOptions, Strategy, TemplateId,
};
use disclose_core::config::{AppConfig, ServiceConfig};
use disclose_core::detect::{DetectError, Detector, PluginError, PluginRegistry};
use disclose_core::importance::{rate_span, ImportanceError, ImportanceLevel};
use disclose_core::llm::{LlmClient, LlmError};
use disclose_core::{apply_edit, Category, CategoryGroup, DisclosureSpan, Document, DocumentError, SpanError, Thread};

pub use schema::schemas;

/// Everything a request handler needs. Immutable after startup.
pub struct ServiceState {
    pub detector: Detector,
    pub llm: Arc<LlmClient>,
    pub generate: GenerateOptions,
    pub token: Option<String>,
}

/// Startup failures, before any request is served.
#[derive(Debug, thiserror::Error)]
pub enum StartupError {
    #[error(transparent)]
    Detect(#[from] DetectError),
    #[error(transparent)]
    Llm(#[from] LlmError),
}

impl ServiceState {
    pub fn from_config(cfg: &AppConfig, registry: &PluginRegistry) -> Result<Self, StartupError> {
        let detector = Detector::from_config(&cfg.detection, registry)?;
        let provider = LlmClient::provider_from_config(&cfg.llm)?;
        let llm = LlmClient::from_config(provider, &cfg.llm)?;
        Ok(Self {
            detector,
            llm: Arc::new(llm),
            generate: GenerateOptions::default(),
            token: cfg.service.token.clone(),
        })
    }

    pub fn versions(&self) -> BTreeMap<String, String> {
        let mut v = self.detector.model_versions();
        v.insert("llm_model".into(), self.llm.model_id().to_string());
        v.insert("llm_provider".into(), self.llm.provider_id());
        v.insert("service".into(), env!("CARGO_PKG_VERSION").to_string());
        for &id in TemplateId::ALL {
            v.insert(format!("prompt:{id}"), id.version());
        }
        v
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
    details: Option<Value>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
            details: None,
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "invalid_request", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({"error": {"code": self.code, "message": self.message}});
        if let Some(d) = self.details {
            body["error"]["details"] = d;
        }
        (self.status, Json(body)).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        ApiError::bad_request(r.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(r: QueryRejection) -> Self {
        ApiError::bad_request(r.body_text())
    }
}

impl From<SpanError> for ApiError {
    fn from(e: SpanError) -> Self {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_span", e.to_string())
    }
}

impl From<LlmError> for ApiError {
    fn from(e: LlmError) -> Self {
        ApiError::new(StatusCode::BAD_GATEWAY, "provider_error", e.to_string())
    }
}

impl From<DetectError> for ApiError {
    fn from(e: DetectError) -> Self {
        match &e {
            DetectError::Document(_) => ApiError::bad_request(e.to_string()),
            DetectError::Tagger { source, .. } | DetectError::Plugin(source) => match source {
                PluginError::Unavailable(_) => ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "plugin_unavailable", e.to_string()),
                _ => ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "plugin_failed", e.to_string()),
            },
            DetectError::InvalidTaggerOutput { .. } | DetectError::Config(_) => {
                ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "plugin_failed", e.to_string())
            }
        }
    }
}

impl From<DocumentError> for ApiError {
    fn from(e: DocumentError) -> Self {
        ApiError::bad_request(e.to_string())
    }
}

impl From<ImportanceError> for ApiError {
    fn from(e: ImportanceError) -> Self {
        match e {
            ImportanceError::Llm(l) => l.into(),
            ImportanceError::Span(s) => s.into(),
            ImportanceError::Unparseable { .. } => ApiError::new(StatusCode::BAD_GATEWAY, "provider_error", e.to_string()),
            other => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "rating_failed", other.to_string()),
        }
    }
}

impl From<AbstractError> for ApiError {
    fn from(e: AbstractError) -> Self {
        match e {
            AbstractError::Span(s) => s.into(),
            AbstractError::CrossesSentence { .. } => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_span", e.to_string())
            }
            AbstractError::Llm(l) => l.into(),
            AbstractError::PartialResult { ref valid, ref rejected, .. } => {
                let details = json!({"valid": valid, "rejected": rejected});
                let mut err = ApiError::new(StatusCode::BAD_GATEWAY, "partial_result", e.to_string());
                err.details = Some(details);
                err
            }
            AbstractError::InvalidOptions(_) => ApiError::bad_request(e.to_string()),
            other => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "abstraction_failed", other.to_string()),
        }
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

/// `POST /v1/detect` body: either a bare text or a whole thread.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectRequest {
    pub text: Option<String>,
    pub thread: Option<Thread>,
}

#[derive(Debug, Deserialize, Default)]
pub struct DetectQuery {
    #[serde(default)]
    pub rate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingOut {
    pub level: ImportanceLevel,
    pub rationale: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectResponse {
    pub spans: Vec<DisclosureSpan>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratings: Option<Vec<RatingOut>>,
    pub model_versions: BTreeMap<String, String>,
}

/// Document id used for bare-text requests.
pub const TEXT_DOC_ID: &str = "input";

fn detect_blocking(state: &ServiceState, req: DetectRequest, rate: bool) -> Result<DetectResponse, ApiError> {
    let thread = match (req.text, req.thread) {
        (Some(text), None) => Thread::new(TEXT_DOC_ID, vec![Document::body(TEXT_DOC_ID, TEXT_DOC_ID, text)])?,
        (None, Some(thread)) => {
            thread.validate()?;
            thread
        }
        _ => return Err(ApiError::bad_request("provide exactly one of `text` or `thread`")),
    };
    let mut spans = Vec::new();
    for doc in &thread.documents {
        if thread.documents.len() > 1 && doc.text.trim().is_empty() {
            continue;
        }
        spans.extend(state.detector.detect(doc)?.spans);
    }
    let order: BTreeMap<&str, usize> = thread.documents.iter().enumerate().map(|(i, d)| (d.id.as_str(), i)).collect();
    spans.sort_by_key(|s| (order[s.doc_id.as_str()], s.start, s.end));
    let ratings = if rate {
        let mut out = Vec::with_capacity(spans.len());
        for s in &spans {
            let r = rate_span(s, &thread, &state.llm, false)?;
            out.push(RatingOut {
                level: r.level,
                rationale: r.rationale,
            });
        }
        Some(out)
    } else {
        None
    };
    Ok(DetectResponse {
        spans,
        ratings,
        model_versions: state.versions(),
    })
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
}

async fn detect(
    State(state): State<Arc<ServiceState>>,
    query: Result<Query<DetectQuery>, QueryRejection>,
    body: Result<Json<DetectRequest>, JsonRejection>,
) -> ApiResult<DetectResponse> {
    let Query(q) = query?;
    let Json(req) = body?;
    Ok(Json(blocking(move || detect_blocking(&state, req, q.rate)).await?))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbstractRequest {
    pub text: String,
    pub span_start: usize,
    pub span_end: usize,
    #[serde(default)]
    pub strategy: Strategy,
    /// Only recorded on the returned span.
    pub category: Option<Category>,
    #[serde(default)]
    pub with_thought: bool,
}

async fn abstract_span(
    State(state): State<Arc<ServiceState>>,
    body: Result<Json<AbstractRequest>, JsonRejection>,
) -> ApiResult<AbstractionSet> {
    let Json(req) = body?;
    let set = blocking(move || {
        let doc = Document::body(TEXT_DOC_ID, TEXT_DOC_ID, req.text);
        let category = req.category.unwrap_or(Category::Location);
        let span = DisclosureSpan::new(&doc, req.span_start, req.span_end, category)?;
        let opts = GenerateOptions {
            with_thought: req.with_thought,
            ..state.generate.clone()
        };
        Ok(generate_abstractions(
            &doc,
            &span,
            req.strategy,
            &opts,
            state.detector.splitter(),
            &state.llm,
        )?)
    })
    .await?;
    Ok(Json(set))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApplyRequest {
    pub text: String,
    pub span_start: usize,
    pub span_end: usize,
    pub replacement: String,
    /// When given, the edit is refused unless the span still holds this text.
    pub expected_text: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApplyResponse {
    pub new_text: String,
    pub new_end: usize,
}

async fn apply(body: Result<Json<ApplyRequest>, JsonRejection>) -> ApiResult<ApplyResponse> {
    let Json(req) = body?;
    if let Some(expected) = &req.expected_text {
        let doc = Document::body(TEXT_DOC_ID, TEXT_DOC_ID, req.text.clone());
        let span = DisclosureSpan {
            doc_id: TEXT_DOC_ID.into(),
            start: req.span_start,
            end: req.span_end,
            category: Category::Location,
            text: expected.clone(),
        };
        span.validate_against(&doc)?;
    }
    let (new_text, new_end) = apply_edit(&req.text, req.span_start, req.span_end, &req.replacement)?;
    Ok(Json(ApplyResponse { new_text, new_end }))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonomyEntry {
    pub name: String,
    pub display_name: String,
    pub group: String,
    pub description: String,
}

pub fn taxonomy_entries() -> Vec<TaxonomyEntry> {
    Category::ALL
        .iter()
        .map(|c| TaxonomyEntry {
            name: c.as_str().to_string(),
            display_name: c.display_name().to_string(),
            group: match c.group() {
                CategoryGroup::Attribute => "attribute",
                CategoryGroup::Experience => "experience",
            }
            .to_string(),
            description: c.description().to_string(),
        })
        .collect()
}

async fn taxonomy() -> Json<Vec<TaxonomyEntry>> {
    Json(taxonomy_entries())
}

async fn health(State(state): State<Arc<ServiceState>>) -> Json<Value> {
    Json(json!({"status": "ok", "versions": state.versions()}))
}

async fn schema() -> Json<Value> {
    Json(schemas())
}

async fn require_token(State(state): State<Arc<ServiceState>>, req: Request, next: Next) -> Response {
    if let Some(token) = &state.token {
        let ok = req
            .headers()
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .is_some_and(|t| t == token);
        if !ok {
            return ApiError::new(StatusCode::UNAUTHORIZED, "unauthorized", "missing or wrong bearer token").into_response();
        }
    }
    next.run(req).await
}

fn cors(origins: &[String]) -> CorsLayer {
    let list: Vec<HeaderValue> = origins.iter().filter_map(|o| HeaderValue::from_str(o).ok()).collect();
    CorsLayer::new()
        .allow_origin(AllowOrigin::list(list))
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([header::CONTENT_TYPE, header::AUTHORIZATION])
}

pub fn router(state: Arc<ServiceState>, cors_origins: &[String]) -> Router {
    let api = Router::new()
        .route("/v1/detect", post(detect))
        .route("/v1/abstract", post(abstract_span))
        .route("/v1/apply", post(apply))
        .route("/v1/taxonomy", get(taxonomy))
        .route("/v1/schema", get(schema))
        .route_layer(middleware::from_fn_with_state(state.clone(), require_token));
    Router::new()
        .route("/health", get(health))
        .merge(api)
        .layer(cors(cors_origins))
        .with_state(state)
}

/// Binds and serves until the process is stopped.
pub async fn serve(state: Arc<ServiceState>, cfg: &ServiceConfig) -> std::io::Result<()> {
    let addr: SocketAddr = format!("{}:{}", cfg.host, cfg.port)
        .parse()
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidInput, format!("{e}")))?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state, &cfg.cors_origins)).await
}
