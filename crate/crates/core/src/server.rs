//! HTTP API over a hot-swappable engine snapshot.
//!
//! Readers load the published snapshot once per request; `/admin/reload`
//! builds a replacement on a blocking thread and swaps it in atomically.
//! In-flight requests finish on the snapshot they started with.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use arc_swap::ArcSwapOption;
use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, HeaderMap, HeaderName, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::cors::{AllowOrigin, CorsLayer};
use tracing::{info, warn};
use uuid::Uuid;

use crate::classifier::ClassifierConfig;
use crate::dataset::QuestionTemplate;
use crate::demo;
use crate::dialogue::{EngineConfig, ReplyKind};
use crate::engine::{self, BuildStats, Snapshot};
use crate::feedback::{FeedbackError, FeedbackStore, Helpful};
use crate::kb::Intent;

pub const SESSION_HEADER: &str = "x-session-id";
pub const MAX_QUESTION_CHARS: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct ServerConfig {
    pub listen: SocketAddr,
    pub admin_token: Option<String>,
    pub model_path: Option<PathBuf>,
    pub templates_path: Option<PathBuf>,
    pub feedback_path: PathBuf,
    pub cors_origin: Option<String>,
    pub seed: u64,
    pub engine: EngineConfig,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            listen: SocketAddr::from(([127, 0, 0, 1], 8080)),
            admin_token: None,
            model_path: None,
            templates_path: None,
            feedback_path: PathBuf::from("feedback.jsonl"),
            cors_origin: None,
            seed: demo::DEFAULT_SEED,
            engine: EngineConfig::default(),
        }
    }
}

impl ServerConfig {
    /// Reads `TMKQA_*` variables over the defaults.
    pub fn from_env() -> Result<Self, String> {
        Self::from_vars(|k| std::env::var(k).ok())
    }

    pub fn from_vars(var: impl Fn(&str) -> Option<String>) -> Result<Self, String> {
        fn parse<T: std::str::FromStr>(key: &str, v: String) -> Result<T, String> {
            v.trim().parse().map_err(|_| format!("{key}: cannot parse `{v}`"))
        }
        let mut cfg = ServerConfig::default();
        if let Some(v) = var("TMKQA_LISTEN") {
            cfg.listen = parse("TMKQA_LISTEN", v)?;
        }
        cfg.admin_token = var("TMKQA_ADMIN_TOKEN").filter(|t| !t.is_empty());
        cfg.model_path = var("TMKQA_MODEL").map(PathBuf::from);
        cfg.templates_path = var("TMKQA_TEMPLATES").map(PathBuf::from);
        if let Some(v) = var("TMKQA_FEEDBACK") {
            cfg.feedback_path = PathBuf::from(v);
        }
        cfg.cors_origin = var("TMKQA_CORS_ORIGIN");
        if let Some(v) = var("TMKQA_SEED") {
            cfg.seed = parse("TMKQA_SEED", v)?;
        }
        if let Some(v) = var("TMKQA_THRESHOLD") {
            cfg.engine.confidence_threshold = parse("TMKQA_THRESHOLD", v)?;
        }
        if let Some(v) = var("TMKQA_RESCUE_MARGIN") {
            cfg.engine.rescue_margin = parse("TMKQA_RESCUE_MARGIN", v)?;
        }
        if let Some(v) = var("TMKQA_SUGGESTIONS") {
            cfg.engine.suggestion_count = parse("TMKQA_SUGGESTIONS", v)?;
        }
        cfg.engine.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SessionContext {
    pub session_id: String,
    pub created_at: u64,
    pub question_count: u64,
}

pub struct AppState {
    snapshot: ArcSwapOption<Snapshot>,
    feedback: FeedbackStore,
    sessions: Mutex<HashMap<String, SessionContext>>,
    reload_lock: tokio::sync::Mutex<()>,
    admin_token: Option<String>,
    templates: Vec<QuestionTemplate>,
    engine_config: EngineConfig,
    seed: u64,
}

impl AppState {
    pub fn new(
        feedback: FeedbackStore,
        admin_token: Option<String>,
        templates: Vec<QuestionTemplate>,
        engine_config: EngineConfig,
        seed: u64,
    ) -> Self {
        AppState {
            snapshot: ArcSwapOption::empty(),
            feedback,
            sessions: Mutex::new(HashMap::new()),
            reload_lock: tokio::sync::Mutex::new(()),
            admin_token,
            templates,
            engine_config,
            seed,
        }
    }

    pub fn publish(&self, snapshot: Snapshot) {
        info!(model_version = snapshot.model_version(), "publishing snapshot");
        self.snapshot.store(Some(Arc::new(snapshot)));
    }

    pub fn current(&self) -> Option<Arc<Snapshot>> {
        self.snapshot.load_full()
    }

    pub fn feedback(&self) -> &FeedbackStore {
        &self.feedback
    }

    pub fn session(&self, id: &str) -> Option<SessionContext> {
        self.sessions.lock().expect("session lock").get(id).cloned()
    }

    fn touch_session(&self, id: &str) {
        let mut sessions = self.sessions.lock().expect("session lock");
        let ctx = sessions.entry(id.to_owned()).or_insert_with(|| SessionContext {
            session_id: id.to_owned(),
            created_at: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            question_count: 0,
        });
        ctx.question_count += 1;
    }
}

fn error(status: StatusCode, code: &str, message: impl Into<String>) -> Response {
    (status, Json(json!({"error": code, "message": message.into()}))).into_response()
}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &Bytes) -> Result<T, Box<Response>> {
    serde_json::from_slice(body)
        .map_err(|e| Box::new(error(StatusCode::BAD_REQUEST, "MALFORMED_BODY", e.to_string())))
}

fn no_snapshot() -> Response {
    error(StatusCode::SERVICE_UNAVAILABLE, "NO_MODEL", "no model is loaded")
}

#[derive(Debug, Deserialize)]
struct AskRequest {
    #[serde(default)]
    session_id: Option<String>,
    question: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AskResponse {
    pub message_id: String,
    pub session_id: String,
    pub kind: ReplyKind,
    pub text: String,
    pub confidence: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intent: Option<Intent>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub object: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suggestions: Option<Vec<String>>,
    pub feedback_prompt: String,
    pub model_version: String,
}

async fn ask(State(state): State<Arc<AppState>>, headers: HeaderMap, body: Bytes) -> Response {
    let req: AskRequest = match parse_body(&body) {
        Ok(r) => r,
        Err(resp) => return *resp,
    };
    if req.question.trim().is_empty() {
        return error(StatusCode::BAD_REQUEST, "EMPTY_QUESTION", "question is empty");
    }
    if req.question.chars().count() > MAX_QUESTION_CHARS {
        return error(
            StatusCode::BAD_REQUEST,
            "QUESTION_TOO_LONG",
            format!("question exceeds {MAX_QUESTION_CHARS} characters"),
        );
    }
    let Some(snapshot) = state.current() else {
        return no_snapshot();
    };
    let session_id = req
        .session_id
        .filter(|s| !s.trim().is_empty())
        .or_else(|| {
            headers
                .get(SESSION_HEADER)
                .and_then(|v| v.to_str().ok())
                .filter(|s| !s.trim().is_empty())
                .map(str::to_owned)
        })
        .unwrap_or_else(|| Uuid::new_v4().to_string());
    state.touch_session(&session_id);
    let reply = snapshot.answer(&req.question, &session_id);
    if let Err(e) = state.feedback.register_reply(&reply, &req.question, &session_id) {
        warn!(error = %e, "could not log reply");
    }
    let resp = AskResponse {
        message_id: reply.message_id,
        session_id: session_id.clone(),
        kind: reply.kind,
        text: reply.text,
        confidence: reply.confidence,
        intent: reply.query.as_ref().map(|q| q.intent),
        object: reply.query.map(|q| q.object_id),
        suggestions: reply.suggestions,
        feedback_prompt: reply.feedback_prompt,
        model_version: snapshot.model_version().to_owned(),
    };
    let mut response = Json(resp).into_response();
    if let Ok(v) = HeaderValue::from_str(&session_id) {
        response.headers_mut().insert(SESSION_HEADER, v);
    }
    response
}

#[derive(Debug, Deserialize)]
struct FeedbackRequest {
    session_id: String,
    message_id: String,
    helpful: String,
}

async fn feedback(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    let req: FeedbackRequest = match parse_body(&body) {
        Ok(r) => r,
        Err(resp) => return *resp,
    };
    let helpful = match req.helpful.as_str() {
        "yes" => Helpful::Yes,
        "no" => Helpful::No,
        other => {
            return error(
                StatusCode::BAD_REQUEST,
                "BAD_HELPFUL",
                format!("helpful must be `yes` or `no`, got `{other}`"),
            )
        }
    };
    match state.feedback.record_feedback(&req.message_id, &req.session_id, helpful) {
        Ok(_) => Json(json!({"status": "recorded"})).into_response(),
        Err(FeedbackError::UnknownMessage(id)) => {
            error(StatusCode::NOT_FOUND, "UNKNOWN_MESSAGE", format!("no reply with id `{id}`"))
        }
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, "FEEDBACK_STORE", e.to_string()),
    }
}

#[derive(Debug, Deserialize)]
struct ReloadRequest {
    model_path: PathBuf,
    #[serde(default)]
    dataset_path: Option<PathBuf>,
    #[serde(default)]
    seed: Option<u64>,
}

fn authorized(state: &AppState, headers: &HeaderMap) -> bool {
    let Some(expected) = &state.admin_token else {
        return false;
    };
    headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .is_some_and(|t| t == expected)
}

async fn reload(State(state): State<Arc<AppState>>, headers: HeaderMap, body: Bytes) -> Response {
    if !authorized(&state, &headers) {
        return error(StatusCode::UNAUTHORIZED, "UNAUTHORIZED", "missing or wrong admin token");
    }
    let req: ReloadRequest = match parse_body(&body) {
        Ok(r) => r,
        Err(resp) => return *resp,
    };
    let _writer = state.reload_lock.lock().await;
    let templates = state.templates.clone();
    let config = state.engine_config.clone();
    let seed = req.seed.unwrap_or(state.seed);
    let built = tokio::task::spawn_blocking(move || {
        let (snapshot, ds) = engine::load_and_build(
            &req.model_path,
            req.dataset_path.as_deref(),
            &templates,
            seed,
            &ClassifierConfig::default(),
            config,
        )?;
        let stats = BuildStats::measure(&snapshot, &ds);
        Ok::<_, engine::LoadError>((snapshot, stats))
    })
    .await;
    match built {
        Ok(Ok((snapshot, stats))) => {
            state.publish(snapshot);
            Json(stats).into_response()
        }
        Ok(Err(e)) => {
            warn!(error = %e, "reload rejected; keeping current snapshot");
            let body = match e.report() {
                Some(report) => json!({"error": "INVALID_MODEL", "message": e.to_string(), "report": report}),
                None => json!({"error": "RELOAD_FAILED", "message": e.to_string()}),
            };
            (StatusCode::UNPROCESSABLE_ENTITY, Json(body)).into_response()
        }
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, "RELOAD_PANICKED", e.to_string()),
    }
}

async fn introspect(State(state): State<Arc<AppState>>) -> Response {
    let Some(snapshot) = state.current() else {
        return no_snapshot();
    };
    let glossary: Vec<&str> = snapshot.model.glossary.iter().map(|g| g.term.as_str()).collect();
    let tasks: Vec<&str> = snapshot.model.tasks.iter().map(|t| t.name.as_str()).collect();
    let intents: Vec<&str> = Intent::ALL.iter().map(|i| i.as_str()).collect();
    Json(json!({
        "glossary": glossary,
        "tasks": tasks,
        "intents": intents,
        "model_version": snapshot.model_version(),
    }))
    .into_response()
}

async fn health(State(state): State<Arc<AppState>>) -> Response {
    match state.current() {
        Some(s) => Json(json!({"status": "ok", "model_version": s.model_version()})).into_response(),
        None => (StatusCode::SERVICE_UNAVAILABLE, Json(json!({"status": "no model"}))).into_response(),
    }
}

fn cors(origin: Option<&str>) -> CorsLayer {
    let allow = match origin.and_then(|o| HeaderValue::from_str(o).ok()) {
        Some(o) => AllowOrigin::exact(o),
        None => AllowOrigin::any(),
    };
    CorsLayer::new()
        .allow_origin(allow)
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([header::CONTENT_TYPE, header::AUTHORIZATION, HeaderName::from_static(SESSION_HEADER)])
        .expose_headers([HeaderName::from_static(SESSION_HEADER)])
}

pub fn router(state: Arc<AppState>, cors_origin: Option<&str>) -> Router {
    let api = Router::new()
        .route("/ask", post(ask))
        .route("/feedback", post(feedback))
        .route("/admin/reload", post(reload))
        .route("/introspect", get(introspect))
        .route("/health", get(health));
    Router::new()
        .nest("/api/v1", api)
        .layer(cors(cors_origin))
        .with_state(state)
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error(transparent)]
    Load(#[from] engine::LoadError),
    #[error("templates: {0}")]
    Templates(String),
    #[error(transparent)]
    Feedback(#[from] FeedbackError),
    #[error("server I/O: {0}")]
    Io(#[from] std::io::Error),
}

/// Builds the state described by `cfg`, loading the configured model if any.
pub fn state_from_config(cfg: &ServerConfig) -> Result<AppState, ServeError> {
    let templates = match &cfg.templates_path {
        Some(p) => crate::dataset::load_templates(&engine::read_file(p)?)
            .map_err(|e| ServeError::Templates(format!("{}: {e}", p.display())))?,
        None => demo::templates(),
    };
    let state = AppState::new(
        FeedbackStore::open(&cfg.feedback_path)?,
        cfg.admin_token.clone(),
        templates,
        cfg.engine.clone(),
        cfg.seed,
    );
    if let Some(model_path) = &cfg.model_path {
        let (snapshot, _) = engine::load_and_build(
            model_path,
            None,
            &state.templates,
            cfg.seed,
            &ClassifierConfig::default(),
            cfg.engine.clone(),
        )?;
        state.publish(snapshot);
    }
    Ok(state)
}

/// Serves until ctrl-c.
pub async fn serve(state: Arc<AppState>, cfg: &ServerConfig) -> Result<(), ServeError> {
    let listener = tokio::net::TcpListener::bind(cfg.listen).await?;
    info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(state, cfg.cors_origin.as_deref()))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
