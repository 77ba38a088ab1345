//! JSON-over-HTTP service: model registry, question answering, simulation and traces.

use std::collections::BTreeMap;
use std::env;
use std::fs;
use std::io;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, PoisonError, RwLock};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::generation::{Answer, GenerationError, Pipeline};
use crate::prompts::PromptSet;
use crate::providers::Providers;
use crate::retrieval::DocCategory;
use crate::sim::{
    simulate, summarize_trace, valid_trace_id, write_atomic, DerivationalTrace, FileTraceStore, SimError, SimOptions,
    StoreError, TraceStore, TraceSummary,
};
use crate::tmk::{load_model, parse_model, serialize_model, validate_model, Issue, TmkModel, WorldState};

pub const ENV_STORAGE_DIR: &str = "IVY_STORAGE_DIR";
pub const ENV_PORT: &str = "IVY_PORT";
pub const DEFAULT_PORT: u16 = 8080;
pub const DEFAULT_STORAGE_DIR: &str = "ivy-data";

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("storage directory {path}: {source}")]
    Storage {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Traces(#[from] StoreError),
    #[error("sessions file {path} is corrupt: {source}")]
    Sessions {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("cannot listen on {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        #[source]
        source: io::Error,
    },
    #[error("server stopped: {0}")]
    Serve(#[source] io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub listen: SocketAddr,
    pub storage_dir: PathBuf,
    pub prompts_dir: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            listen: SocketAddr::from(([127, 0, 0, 1], DEFAULT_PORT)),
            storage_dir: PathBuf::from(DEFAULT_STORAGE_DIR),
            prompts_dir: None,
        }
    }
}

impl ServiceConfig {
    /// Defaults overridden by `IVY_PORT` and `IVY_STORAGE_DIR`.
    pub fn from_env() -> Self {
        let mut c = ServiceConfig::default();
        if let Some(port) = env::var(ENV_PORT).ok().and_then(|p| p.parse().ok()) {
            c.listen.set_port(port);
        }
        if let Ok(dir) = env::var(ENV_STORAGE_DIR) {
            c.storage_dir = PathBuf::from(dir);
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub session_id: String,
    pub model_id: String,
    pub created_at: DateTime<Utc>,
    pub question_count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub id: String,
    pub title: String,
    pub tasks: usize,
    pub methods: usize,
    pub knowledge: usize,
    pub documents: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<Issue>,
}

impl ModelSummary {
    pub fn of(pipeline: &Pipeline) -> Self {
        let model = pipeline.model();
        ModelSummary {
            id: model.id.clone(),
            title: model.title.clone(),
            tasks: model.tasks.len(),
            methods: model.methods.len(),
            knowledge: model.knowledge.len(),
            documents: pipeline.index().len(),
            warnings: validate_model(model).warnings,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentRef {
    pub doc_id: String,
    pub category: DocCategory,
    pub title: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDetail {
    pub summary: ModelSummary,
    pub documents: Vec<DocumentRef>,
    pub model: TmkModel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AskRequest {
    pub model_id: String,
    pub question: String,
    #[serde(default)]
    pub session_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulateRequest {
    pub model_id: String,
    pub task_id: String,
    #[serde(default)]
    pub initial_state: Option<WorldState>,
    #[serde(default)]
    pub step_limit: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateResponse {
    pub trace_id: String,
    pub summary: TraceSummary,
    pub narrative: String,
    pub trace: DerivationalTrace,
}

impl SimulateResponse {
    pub fn new(model: &TmkModel, trace: DerivationalTrace) -> Self {
        let summary = summarize_trace(&trace);
        let narrative = summary.narrate(Some(model));
        SimulateResponse { trace_id: trace.trace_id.clone(), summary, narrative, trace }
    }
}

/// Pretty JSON with a trailing newline. HTTP bodies and `--json` CLI output share it.
pub fn to_json_text<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("response types always serialize");
    s.push('\n');
    s
}

/// Models and sessions on disk under one directory.
#[derive(Debug)]
struct Storage {
    root: PathBuf,
}

impl Storage {
    fn open(root: &Path) -> Result<Self, ServiceError> {
        for dir in [root.to_path_buf(), root.join("models"), root.join("traces")] {
            fs::create_dir_all(&dir).map_err(|source| ServiceError::Storage { path: dir.clone(), source })?;
        }
        Ok(Storage { root: root.to_path_buf() })
    }

    fn model_path(&self, id: &str) -> PathBuf {
        self.root.join("models").join(format!("{id}.tmk.json"))
    }

    fn sessions_path(&self) -> PathBuf {
        self.root.join("sessions.json")
    }
}

/// Shared state behind the router.
pub struct AppState {
    registry: RwLock<BTreeMap<String, Arc<Pipeline>>>,
    sessions: Mutex<BTreeMap<String, SessionRecord>>,
    storage: Storage,
    traces: Arc<FileTraceStore>,
    providers: Providers,
    prompts: Arc<PromptSet>,
}

impl std::fmt::Debug for AppState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AppState").field("storage", &self.storage.root).field("providers", &self.providers).finish()
    }
}

impl AppState {
    /// Opens the storage directory and re-registers every persisted model.
    pub fn open(storage_dir: &Path, providers: Providers, prompts: PromptSet) -> Result<Arc<Self>, ServiceError> {
        let storage = Storage::open(storage_dir)?;
        let traces = Arc::new(FileTraceStore::open(storage.root.join("traces"))?);
        let sessions = match fs::read_to_string(storage.sessions_path()) {
            Ok(text) => serde_json::from_str(&text)
                .map_err(|source| ServiceError::Sessions { path: storage.sessions_path(), source })?,
            Err(e) if e.kind() == io::ErrorKind::NotFound => BTreeMap::new(),
            Err(source) => return Err(ServiceError::Storage { path: storage.sessions_path(), source }),
        };
        let state = AppState {
            registry: RwLock::new(BTreeMap::new()),
            sessions: Mutex::new(sessions),
            storage,
            traces,
            providers,
            prompts: Arc::new(prompts),
        };
        state.reload_models()?;
        Ok(Arc::new(state))
    }

    fn reload_models(&self) -> Result<(), ServiceError> {
        let dir = self.storage.root.join("models");
        let entries = fs::read_dir(&dir).map_err(|source| ServiceError::Storage { path: dir.clone(), source })?;
        let mut paths: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.to_string_lossy().ends_with(".tmk.json"))
            .collect();
        paths.sort();
        let mut registry = self.registry.write().unwrap_or_else(PoisonError::into_inner);
        for path in paths {
            let loaded = load_model(&path).map_err(|e| e.to_string()).and_then(|m| {
                let report = validate_model(&m);
                if report.is_valid() {
                    self.pipeline(m).map_err(|e| e.to_string())
                } else {
                    Err(report.to_string())
                }
            });
            match loaded {
                Ok(p) => {
                    log::info!("loaded model `{}` from {}", p.model().id, path.display());
                    registry.insert(p.model().id.clone(), Arc::new(p));
                }
                Err(e) => log::warn!("skipping {}: {e}", path.display()),
            }
        }
        Ok(())
    }

    fn pipeline(&self, model: TmkModel) -> Result<Pipeline, crate::retrieval::RetrievalError> {
        let traces: Arc<dyn TraceStore> = self.traces.clone();
        Ok(Pipeline::new(model, self.providers.clone(), self.prompts.clone())?.with_trace_store(traces))
    }

    fn get(&self, id: &str) -> Option<Arc<Pipeline>> {
        self.registry.read().unwrap_or_else(PoisonError::into_inner).get(id).cloned()
    }

    pub fn model_ids(&self) -> Vec<String> {
        self.registry.read().unwrap_or_else(PoisonError::into_inner).keys().cloned().collect()
    }

    fn record_question(&self, session_id: &str, model_id: &str) -> Result<(), ApiError> {
        if !valid_trace_id(session_id) {
            return Err(ApiError::new(StatusCode::BAD_REQUEST, format!("invalid session id `{session_id}`")));
        }
        let mut sessions = self.sessions.lock().unwrap_or_else(PoisonError::into_inner);
        let record = sessions.entry(session_id.to_string()).or_insert_with(|| SessionRecord {
            session_id: session_id.to_string(),
            model_id: model_id.to_string(),
            created_at: Utc::now(),
            question_count: 0,
        });
        if record.model_id != model_id {
            return Err(ApiError::new(
                StatusCode::CONFLICT,
                format!("session `{session_id}` is bound to model `{}`", record.model_id),
            ));
        }
        record.question_count += 1;
        let path = self.storage.sessions_path();
        write_atomic(&path, to_json_text(&*sessions).as_bytes()).map_err(|e| ApiError::internal(e.to_string()))
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: serde_json::Value,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError { status, body: json!({ "error": message.into() }) }
    }

    fn internal(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        json_response(self.status, &self.body)
    }
}

fn json_response<T: Serialize>(status: StatusCode, value: &T) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], to_json_text(value)).into_response()
}

fn generation_status(e: &GenerationError) -> StatusCode {
    match e {
        GenerationError::EmptyQuestion => StatusCode::UNPROCESSABLE_ENTITY,
        e if e.is_provider_failure() => StatusCode::BAD_GATEWAY,
        GenerationError::NoInitialState(_) | GenerationError::Simulation(_) => StatusCode::UNPROCESSABLE_ENTITY,
        _ => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

fn sim_status(e: &SimError) -> StatusCode {
    match e {
        SimError::UnknownTask(_) => StatusCode::NOT_FOUND,
        _ => StatusCode::UNPROCESSABLE_ENTITY,
    }
}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, format!("malformed request: {e}")))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError::internal(format!("worker failed: {e}")))
}

async fn health(State(state): State<Arc<AppState>>) -> Response {
    json_response(StatusCode::OK, &json!({ "status": "ok", "models": state.model_ids().len() }))
}

async fn list_models(State(state): State<Arc<AppState>>) -> Response {
    let summaries: Vec<ModelSummary> =
        state.registry.read().unwrap_or_else(PoisonError::into_inner).values().map(|p| ModelSummary::of(p)).collect();
    json_response(StatusCode::OK, &summaries)
}

async fn get_model(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> Result<Response, ApiError> {
    let p = state.get(&id).ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("unknown model `{id}`")))?;
    let documents = p
        .index()
        .documents()
        .map(|d| DocumentRef { doc_id: d.doc_id.clone(), category: d.category, title: d.title.clone() })
        .collect();
    let detail = ModelDetail { summary: ModelSummary::of(&p), documents, model: p.model().clone() };
    Ok(json_response(StatusCode::OK, &detail))
}

async fn upload_model(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let text = std::str::from_utf8(&body).map_err(|_| ApiError::new(StatusCode::BAD_REQUEST, "body is not UTF-8"))?;
    let model = parse_model(text).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.to_string()))?;
    let report = validate_model(&model);
    if !report.is_valid() {
        return Ok(json_response(StatusCode::BAD_REQUEST, &report));
    }
    if !valid_trace_id(&model.id) {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, format!("model id `{}` is not file-safe", model.id)));
    }
    let st = state.clone();
    blocking(move || {
        let mut registry = st.registry.write().unwrap_or_else(PoisonError::into_inner);
        if registry.contains_key(&model.id) {
            return Err(ApiError::new(StatusCode::CONFLICT, format!("model `{}` is already registered", model.id)));
        }
        let serialized = serialize_model(&model);
        let pipeline = st.pipeline(model).map_err(|e| ApiError::internal(e.to_string()))?;
        let id = pipeline.model().id.clone();
        write_atomic(&st.storage.model_path(&id), serialized.as_bytes())
            .map_err(|e| ApiError::internal(format!("cannot persist model: {e}")))?;
        let summary = ModelSummary::of(&pipeline);
        registry.insert(id, Arc::new(pipeline));
        Ok(json_response(StatusCode::CREATED, &summary))
    })
    .await?
}

async fn ask(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let req: AskRequest = parse_body(&body)?;
    if req.question.trim().is_empty() {
        return Err(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "question is empty"));
    }
    let p = state
        .get(&req.model_id)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("unknown model `{}`", req.model_id)))?;
    if let Some(session) = &req.session_id {
        state.record_question(session, &req.model_id)?;
    }
    let question = req.question.clone();
    let answer: Result<Answer, GenerationError> = blocking(move || p.answer(&question)).await?;
    match answer {
        Ok(a) => Ok(json_response(StatusCode::OK, &a)),
        Err(e) => Err(ApiError::new(generation_status(&e), e.to_string())),
    }
}

async fn run_simulation(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let req: SimulateRequest = parse_body(&body)?;
    let p = state
        .get(&req.model_id)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("unknown model `{}`", req.model_id)))?;
    let initial = match req.initial_state.or_else(|| p.model().default_initial.clone()) {
        Some(ws) => ws,
        None => {
            return Err(ApiError::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "no initial_state given and the model declares no default_initial",
            ))
        }
    };
    let options = req.step_limit.map_or_else(SimOptions::default, SimOptions::with_step_limit);
    let traces = state.traces.clone();
    blocking(move || {
        let trace = simulate(p.model(), &req.task_id, &initial, options)
            .map_err(|e| ApiError::new(sim_status(&e), e.to_string()))?;
        traces.put(&trace).map_err(|e| ApiError::internal(e.to_string()))?;
        Ok(json_response(StatusCode::OK, &SimulateResponse::new(p.model(), trace)))
    })
    .await?
}

async fn get_trace(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> Result<Response, ApiError> {
    let not_found = || ApiError::new(StatusCode::NOT_FOUND, format!("unknown trace `{id}`"));
    if !valid_trace_id(&id) {
        return Err(not_found());
    }
    let traces = state.traces.clone();
    let lookup = id.clone();
    match blocking(move || traces.get(&lookup)).await? {
        Ok(Some(trace)) => Ok(json_response(StatusCode::OK, &trace)),
        Ok(None) => Err(not_found()),
        Err(e) => Err(ApiError::internal(e.to_string())),
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/models", get(list_models).post(upload_model))
        .route("/models/{id}", get(get_model))
        .route("/ask", post(ask))
        .route("/simulate", post(run_simulation))
        .route("/traces/{id}", get(get_trace))
        .with_state(state)
}

/// Binds `addr` and serves in a background task. Returns the bound address.
pub async fn start(
    state: Arc<AppState>,
    addr: SocketAddr,
) -> Result<(SocketAddr, tokio::task::JoinHandle<Result<(), ServiceError>>), ServiceError> {
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(|source| ServiceError::Bind { addr, source })?;
    let local = listener.local_addr().map_err(|source| ServiceError::Bind { addr, source })?;
    let app = router(state);
    let handle = tokio::spawn(async move { axum::serve(listener, app).await.map_err(ServiceError::Serve) });
    Ok((local, handle))
}

/// Serves until Ctrl-C.
pub async fn serve(config: ServiceConfig, providers: Providers) -> Result<(), ServiceError> {
    let prompts = match &config.prompts_dir {
        Some(dir) => PromptSet::from_dir(dir)
            .map_err(|e| ServiceError::Storage { path: dir.clone(), source: io::Error::other(e.to_string()) })?,
        None => PromptSet::builtin(),
    };
    let state = AppState::open(&config.storage_dir, providers, prompts)?;
    let listener = tokio::net::TcpListener::bind(config.listen)
        .await
        .map_err(|source| ServiceError::Bind { addr: config.listen, source })?;
    log::info!("listening on http://{}", listener.local_addr().map_err(ServiceError::Serve)?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(ServiceError::Serve)
}
