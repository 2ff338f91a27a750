//! HTTP API: sessions, turns, disambiguation, health, metrics and reload.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use kgagent_core::agent::{Agent, AgentTurn, ConfirmError, PipelineConfig, SessionState};
use kgagent_core::store::MatchStrategy;
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::sync::Mutex as AsyncMutex;

use crate::config::ServiceConfig;

/// Result rows returned per turn.
pub const MAX_ROWS: usize = 50;

const LATENCY_BUCKETS_MS: [u64; 9] = [50, 100, 250, 500, 1000, 2500, 5000, 10_000, 30_000];

/// Everything loaded from disk, replaced as a whole on reload.
pub struct Snapshot {
    pub agent: Agent,
    pub loaded_at: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LoadState {
    Loading,
    Ready,
    Failed,
}

#[derive(Default)]
struct Metrics {
    turns: AtomicU64,
    reflections: AtomicU64,
    syntax_failures: AtomicU64,
    errors: AtomicU64,
    timeouts: AtomicU64,
    latency: [AtomicU64; LATENCY_BUCKETS_MS.len() + 1],
}

impl Metrics {
    fn record(&self, turn: &AgentTurn, elapsed: Duration) {
        self.turns.fetch_add(1, Ordering::Relaxed);
        self.reflections.fetch_add(turn.reflections() as u64, Ordering::Relaxed);
        if !turn.script_attempts.is_empty() && turn.final_script.is_none() {
            self.syntax_failures.fetch_add(1, Ordering::Relaxed);
        }
        if turn.error.is_some() {
            self.errors.fetch_add(1, Ordering::Relaxed);
        }
        let ms = elapsed.as_millis() as u64;
        let bucket = LATENCY_BUCKETS_MS.iter().position(|b| ms <= *b).unwrap_or(LATENCY_BUCKETS_MS.len());
        self.latency[bucket].fetch_add(1, Ordering::Relaxed);
    }

    fn to_json(&self) -> Value {
        let mut hist = serde_json::Map::new();
        for (i, c) in self.latency.iter().enumerate() {
            let key = match LATENCY_BUCKETS_MS.get(i) {
                Some(b) => format!("le_{b}"),
                None => "inf".to_string(),
            };
            hist.insert(key, json!(c.load(Ordering::Relaxed)));
        }
        json!({
            "turns": self.turns.load(Ordering::Relaxed),
            "reflections": self.reflections.load(Ordering::Relaxed),
            "syntax_failures": self.syntax_failures.load(Ordering::Relaxed),
            "errors": self.errors.load(Ordering::Relaxed),
            "timeouts": self.timeouts.load(Ordering::Relaxed),
            "latency_ms": hist,
        })
    }
}

pub struct AppState {
    config: ServiceConfig,
    snapshot: RwLock<Option<Arc<Snapshot>>>,
    load_state: Mutex<(LoadState, Option<String>)>,
    sessions: Mutex<HashMap<String, Arc<AsyncMutex<SessionState>>>>,
    metrics: Metrics,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Arc<Self> {
        Arc::new(AppState {
            config,
            snapshot: RwLock::new(None),
            load_state: Mutex::new((LoadState::Loading, None)),
            sessions: Mutex::new(HashMap::new()),
            metrics: Metrics::default(),
        })
    }

    fn current(&self) -> Option<Arc<Snapshot>> {
        self.snapshot.read().expect("snapshot lock").clone()
    }

    fn publish(&self, agent: Agent) {
        let snap = Snapshot {
            agent,
            loaded_at: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        };
        *self.snapshot.write().expect("snapshot lock") = Some(Arc::new(snap));
        *self.load_state.lock().expect("load state lock") = (LoadState::Ready, None);
    }

    /// Loads from the configured files and swaps the new snapshot in. On
    /// failure the previous snapshot keeps serving.
    pub async fn load(self: &Arc<Self>) -> Result<(), String> {
        let cfg = self.config.clone();
        let built = tokio::task::spawn_blocking(move || cfg.build_agent())
            .await
            .map_err(|e| format!("loader crashed: {e}"))
            .and_then(|r| r.map_err(|e| format!("{e:#}")));
        match built {
            Ok(agent) => {
                self.publish(agent);
                log::info!("snapshot loaded");
                Ok(())
            }
            Err(e) => {
                log::error!("load failed: {e}");
                let mut st = self.load_state.lock().expect("load state lock");
                if self.current().is_none() {
                    st.0 = LoadState::Failed;
                }
                st.1 = Some(e.clone());
                Err(e)
            }
        }
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    let mut app = Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/:id/messages", post(post_message))
        .route("/sessions/:id/disambiguate", post(disambiguate))
        .route("/health", get(health))
        .route("/metrics", get(metrics))
        .route("/admin/reload", post(reload));
    if let Some(dir) = &state.config.ui_dir {
        app = app.nest_service("/ui", tower_http::services::ServeDir::new(dir));
    }
    app.fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint") })
        .with_state(state)
}

pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({"error": {"code": self.code, "message": self.message}});
        (self.status, Json(body)).into_response()
    }
}

fn not_ready() -> ApiError {
    ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "not_ready", "the graph and example store are still loading")
}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "bad_request", e.to_string()))
}

async fn create_session(State(state): State<Arc<AppState>>) -> Result<Response, ApiError> {
    if state.current().is_none() {
        return Err(not_ready());
    }
    let id = uuid::Uuid::new_v4().simple().to_string();
    state
        .sessions
        .lock()
        .expect("sessions lock")
        .insert(id.clone(), Arc::new(AsyncMutex::new(SessionState::new(id.clone()))));
    Ok((StatusCode::CREATED, Json(json!({"session_id": id}))).into_response())
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Overrides {
    strategy: Option<String>,
    k: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MessageBody {
    text: String,
    #[serde(default)]
    overrides: Option<Overrides>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DisambiguateBody {
    candidate_id: String,
}

fn apply_overrides(base: &PipelineConfig, o: Option<Overrides>) -> Result<PipelineConfig, ApiError> {
    let mut cfg = base.clone();
    if let Some(o) = o {
        if let Some(s) = o.strategy {
            cfg.strategy = s
                .parse::<MatchStrategy>()
                .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "bad_override", e))?;
        }
        if let Some(k) = o.k {
            if !(1..=20).contains(&k) {
                return Err(ApiError::new(StatusCode::BAD_REQUEST, "bad_override", "k must be between 1 and 20"));
            }
            cfg.k = k;
        }
    }
    Ok(cfg)
}

fn session(state: &AppState, id: &str) -> Result<Arc<AsyncMutex<SessionState>>, ApiError> {
    state
        .sessions
        .lock()
        .expect("sessions lock")
        .get(id)
        .cloned()
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "unknown_session", format!("no session {id}")))
}

/// Turn JSON with result rows capped at [`MAX_ROWS`].
pub fn turn_json(session_id: &str, turn: &AgentTurn) -> Value {
    let mut v = serde_json::to_value(turn).expect("turn serializes");
    let (rows, total) = match &turn.result {
        Some(rs) => (
            rs.rows.iter().take(MAX_ROWS).map(|r| r.to_json()).collect::<Vec<_>>(),
            rs.len(),
        ),
        None => (Vec::new(), 0),
    };
    let obj = v.as_object_mut().expect("turn is an object");
    obj.insert("session_id".into(), json!(session_id));
    obj.insert("result".into(), if turn.result.is_some() { json!(rows) } else { Value::Null });
    obj.insert("total_rows".into(), json!(total));
    obj.insert("truncated".into(), json!(total > MAX_ROWS));
    v
}

enum Work {
    Message(String, PipelineConfig),
    Confirm(String, PipelineConfig),
}

/// Runs one unit of work for a session on a blocking thread, holding the
/// session lock for its whole duration.
async fn run_turn(state: Arc<AppState>, id: String, work: Work) -> Result<Response, ApiError> {
    let snap = state.current().ok_or_else(not_ready)?;
    let slot = session(&state, &id)?;
    let guard = slot
        .try_lock_owned()
        .map_err(|_| ApiError::new(StatusCode::CONFLICT, "turn_in_flight", "a message for this session is still being answered"))?;
    let started = Instant::now();
    let st = state.clone();
    let sid = id.clone();
    let task = tokio::task::spawn_blocking(move || {
        let mut guard = guard;
        let out = match work {
            Work::Message(text, cfg) => Ok(snap.agent.handle_turn(&mut guard, &text, &cfg)),
            Work::Confirm(cand, cfg) => snap.agent.confirm_candidate(&mut guard, &cand, &cfg),
        };
        if let Ok(turn) = &out {
            st.metrics.record(turn, started.elapsed());
        }
        out.map(|t| turn_json(&sid, &t))
    });
    let deadline = Duration::from_millis(state.config.deadline_ms);
    match tokio::time::timeout(deadline, task).await {
        Err(_) => {
            state.metrics.timeouts.fetch_add(1, Ordering::Relaxed);
            Err(ApiError::new(
                StatusCode::GATEWAY_TIMEOUT,
                "deadline_exceeded",
                format!("no answer within {} ms", state.config.deadline_ms),
            ))
        }
        Ok(Err(e)) => {
            log::error!("turn task failed: {e}");
            Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", "the turn could not be completed"))
        }
        Ok(Ok(Err(ConfirmError::NothingPending))) => Err(ApiError::new(
            StatusCode::NOT_FOUND,
            "nothing_pending",
            "this session has no open disambiguation",
        )),
        Ok(Ok(Err(ConfirmError::UnknownCandidate(c)))) => Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "unknown_candidate",
            format!("{c} is not one of the offered candidates"),
        )),
        Ok(Ok(Ok(body))) => Ok(Json(body).into_response()),
    }
}

async fn post_message(State(state): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> Result<Response, ApiError> {
    let body: MessageBody = parse_body(&body)?;
    let cfg = apply_overrides(&state.config.pipeline, body.overrides)?;
    run_turn(state, id, Work::Message(body.text, cfg)).await
}

async fn disambiguate(State(state): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> Result<Response, ApiError> {
    let body: DisambiguateBody = parse_body(&body)?;
    let cfg = state.config.pipeline.clone();
    run_turn(state, id, Work::Confirm(body.candidate_id, cfg)).await
}

async fn health(State(state): State<Arc<AppState>>) -> Response {
    let (load, last_error) = state.load_state.lock().expect("load state lock").clone();
    let status = match load {
        LoadState::Loading => "loading",
        LoadState::Ready => "ready",
        LoadState::Failed => "failed",
    };
    let mut body = json!({"status": status, "sessions": state.sessions.lock().expect("sessions lock").len()});
    if let Some(s) = state.current() {
        body["vertices"] = json!(s.agent.graph().vertices().len());
        body["edges"] = json!(s.agent.graph().edges().len());
        body["example_pairs"] = json!(s.agent.store().len());
        body["backend"] = json!(s.agent.backend().id());
        body["loaded_at"] = json!(s.loaded_at);
    }
    if let Some(e) = last_error {
        body["last_error"] = json!(e);
    }
    let code = if load == LoadState::Ready { StatusCode::OK } else { StatusCode::SERVICE_UNAVAILABLE };
    (code, Json(body)).into_response()
}

async fn metrics(State(state): State<Arc<AppState>>) -> Json<Value> {
    Json(state.metrics.to_json())
}

async fn reload(State(state): State<Arc<AppState>>) -> Result<Json<Value>, ApiError> {
    state
        .load()
        .await
        .map_err(|e| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "reload_failed", format!("{e}; the previous data is still serving")))?;
    let snap = state.current().ok_or_else(not_ready)?;
    Ok(Json(json!({
        "status": "reloaded",
        "vertices": snap.agent.graph().vertices().len(),
        "example_pairs": snap.agent.store().len(),
    })))
}

/// Binds, starts loading in the background and serves until shutdown.
pub async fn serve(config: ServiceConfig) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(&config.listen).await?;
    log::info!("listening on {}", listener.local_addr()?);
    let state = AppState::new(config);
    let loader = state.clone();
    tokio::spawn(async move {
        let _ = loader.load().await;
    });
    axum::serve(listener, router(state)).await?;
    Ok(())
}
