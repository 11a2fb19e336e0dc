//! HTTP and WebSocket service for live games against trained agents.
//!
//! Routes:
//!
//! | method | path | body / reply |
//! |---|---|---|
//! | POST | `/sessions` | [`api::CreateSession`] → 201 [`api::SessionView`] |
//! | GET | `/sessions/{id}` | [`api::SessionView`] |
//! | POST | `/sessions/{id}/moves` | [`api::SubmitMove`] → [`api::Accepted`] or [`api::Rejection`] |
//! | GET (WebSocket) | `/sessions/{id}/stream` | [`api::Frame`] JSON text messages |
//!
//! Anything else is served from the static directory when one is configured.

pub mod api;
pub mod session;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::{Component, Path, PathBuf};
use std::sync::{Arc, RwLock};
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::ws::{CloseFrame, Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::json;
use sls_core::agents::AgentVariant;
use sls_core::env::encode;
use sls_core::neural::Network;
use sls_core::training::load_policy;
use sls_core::{GameConfig, GameState};
use thiserror::Error;
use tokio::sync::broadcast::error::RecvError;
use tower_http::services::ServeDir;

use api::{CreateSession, Frame, Rejection, SeatRequest, SubmitMove};
use session::{Seat, SessionHandle, SessionSetup};

#[derive(Clone, Debug)]
pub struct ServerConfig {
    /// Checkpoint refs in session requests resolve below this directory.
    pub checkpoint_root: PathBuf,
    /// Policy for agent seats that name no checkpoint.
    pub default_checkpoint: Option<PathBuf>,
    pub static_dir: Option<PathBuf>,
    /// Pause before each automated move unless the request overrides it.
    pub delay: Duration,
    pub max_sessions: usize,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            checkpoint_root: PathBuf::from("."),
            default_checkpoint: None,
            static_dir: None,
            delay: Duration::from_millis(400),
            max_sessions: 1024,
        }
    }
}

#[derive(Debug, Error)]
pub enum ServerError {
    #[error("default checkpoint {path}: {message}")]
    Checkpoint { path: PathBuf, message: String },
    #[error("static directory {0} does not exist")]
    StaticDir(PathBuf),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone)]
struct Policy {
    variant: AgentVariant,
    network: Arc<Network>,
    label: String,
}

struct AppState {
    config: ServerConfig,
    default_policy: Option<Policy>,
    sessions: RwLock<HashMap<String, SessionHandle>>,
}

type Shared = Arc<AppState>;

#[derive(Debug)]
struct ApiError {
    status: StatusCode,
    body: serde_json::Value,
}

impl ApiError {
    fn new(status: StatusCode, error: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: json!({ "error": error, "message": message.into() }),
        }
    }

    fn not_found(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", format!("no session {id}"))
    }

    fn bad_checkpoint(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_checkpoint", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<Rejection> for ApiError {
    fn from(r: Rejection) -> Self {
        let status = match r {
            Rejection::NotYourTurn { .. } | Rejection::GameOver => StatusCode::CONFLICT,
            Rejection::SeatNotHuman { .. } => StatusCode::FORBIDDEN,
            Rejection::IllegalMove { .. } => StatusCode::UNPROCESSABLE_ENTITY,
        };
        Self {
            status,
            body: serde_json::to_value(r).expect("rejections serialize"),
        }
    }
}

fn load(path: &Path, label: String) -> Result<Policy, String> {
    let (variant, network) = load_policy(path).map_err(|e| e.to_string())?;
    let expected = encode(&GameState::new(GameConfig::default()).expect("default config is valid")).len();
    if network.shape().input != expected {
        return Err(format!(
            "network expects {} inputs but the game produces {expected}",
            network.shape().input
        ));
    }
    Ok(Policy {
        variant,
        network: Arc::new(network),
        label,
    })
}

/// Builds the router, loading the default checkpoint up front.
pub fn router(config: ServerConfig) -> Result<Router, ServerError> {
    let default_policy = match &config.default_checkpoint {
        Some(path) => Some(
            load(path, path.display().to_string()).map_err(|message| ServerError::Checkpoint {
                path: path.clone(),
                message,
            })?,
        ),
        None => None,
    };
    let static_dir = config.static_dir.clone();
    if let Some(dir) = &static_dir {
        if !dir.is_dir() {
            return Err(ServerError::StaticDir(dir.clone()));
        }
    }
    let state = Arc::new(AppState {
        config,
        default_policy,
        sessions: RwLock::new(HashMap::new()),
    });
    let app = Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/moves", post(submit_move))
        .route("/sessions/{id}/stream", get(stream))
        .with_state(state);
    Ok(match static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app,
    })
}

pub async fn serve(config: ServerConfig, addr: SocketAddr) -> Result<(), ServerError> {
    let app = router(config)?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, app).await?;
    Ok(())
}

impl AppState {
    fn session(&self, id: &str) -> Result<SessionHandle, ApiError> {
        let sessions = self.sessions.read().expect("session map lock");
        sessions.get(id).cloned().ok_or_else(|| ApiError::not_found(id))
    }

    fn resolve(&self, reference: &str) -> Result<PathBuf, ApiError> {
        let rel = Path::new(reference);
        if reference.is_empty() || !rel.components().all(|c| matches!(c, Component::Normal(_))) {
            return Err(ApiError::bad_checkpoint(format!(
                "checkpoint {reference:?} must be a relative path below the checkpoint directory"
            )));
        }
        Ok(self.config.checkpoint_root.join(rel))
    }

    async fn seat(&self, request: &SeatRequest) -> Result<Seat, ApiError> {
        let (wanted, reference) = match request {
            SeatRequest::Human => return Ok(Seat::Human),
            SeatRequest::Random
            | SeatRequest::Agent {
                variant: Some(AgentVariant::Random),
                ..
            } => return Ok(Seat::Random),
            SeatRequest::Agent { variant, checkpoint } => (*variant, checkpoint.as_deref()),
        };
        let policy = match reference {
            None => self.default_policy.clone().ok_or_else(|| {
                ApiError::bad_checkpoint("agent seat names no checkpoint and the server has no default")
            })?,
            Some(r) => {
                let path = self.resolve(r)?;
                let label = r.to_string();
                tokio::task::spawn_blocking(move || load(&path, label))
                    .await
                    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
                    .map_err(|m| ApiError::bad_checkpoint(format!("checkpoint {r:?}: {m}")))?
            }
        };
        let variant = match wanted {
            Some(v) if v.architecture() != Some(policy.network.architecture()) => {
                return Err(ApiError::bad_checkpoint(format!(
                    "checkpoint {} holds a {} network, not {v}",
                    policy.label, policy.variant
                )))
            }
            Some(v) => v,
            None => policy.variant,
        };
        Ok(Seat::Agent {
            variant,
            network: policy.network,
            checkpoint: policy.label,
        })
    }
}

async fn create_session(State(app): State<Shared>, body: Bytes) -> Result<Response, ApiError> {
    let req = CreateSession::from_json(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "bad_request", e.to_string()))?;
    let mut seats = Vec::with_capacity(req.seats.len());
    for s in &req.seats {
        seats.push(app.seat(s).await?);
    }
    let seed = req.seed.unwrap_or_else(rand::random);
    let state = GameState::new(GameConfig::with_seed(seed)).expect("default config is valid");
    let id = uuid::Uuid::new_v4().simple().to_string();
    let setup = SessionSetup {
        id: id.clone(),
        state,
        seats,
        seed,
        delay: req.delay_ms.map_or(app.config.delay, Duration::from_millis),
        agent_epsilon: req.agent_epsilon,
    };
    {
        let sessions = app.sessions.read().expect("session map lock");
        if sessions.len() >= app.config.max_sessions {
            return Err(ApiError::new(
                StatusCode::SERVICE_UNAVAILABLE,
                "too_many_sessions",
                format!("the server holds its limit of {} sessions", app.config.max_sessions),
            ));
        }
    }
    let handle = SessionHandle::spawn(setup);
    let view = handle.snapshot();
    app.sessions.write().expect("session map lock").insert(id, handle);
    Ok((StatusCode::CREATED, Json(view.as_ref())).into_response())
}

async fn get_session(State(app): State<Shared>, UrlPath(id): UrlPath<String>) -> Result<Response, ApiError> {
    let view = app.session(&id)?.snapshot();
    Ok(Json(view.as_ref()).into_response())
}

async fn submit_move(
    State(app): State<Shared>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let handle = app.session(&id)?;
    let req = SubmitMove::from_json(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "bad_request", e.to_string()))?;
    let accepted = handle.submit(req.seat, req.mv).await?;
    Ok(Json(accepted).into_response())
}

async fn stream(
    ws: WebSocketUpgrade,
    State(app): State<Shared>,
    UrlPath(id): UrlPath<String>,
) -> Result<Response, ApiError> {
    let handle = app.session(&id)?;
    Ok(ws.on_upgrade(move |socket| pump(socket, handle)))
}

/// Sends the current snapshot, then every newer frame in version order.
async fn pump(mut socket: WebSocket, handle: SessionHandle) {
    let (view, mut frames) = handle.subscribe();
    let first = serde_json::to_string(&Frame {
        version: view.version,
        event: None,
        state: &view,
    })
    .expect("frames serialize");
    if socket.send(Message::Text(first.into())).await.is_err() {
        return;
    }
    let mut last = view.version;
    loop {
        tokio::select! {
            frame = frames.recv() => match frame {
                Ok(f) if f.version <= last => {}
                Ok(f) => {
                    last = f.version;
                    if socket.send(Message::Text(f.json.clone().into())).await.is_err() {
                        return;
                    }
                }
                Err(RecvError::Lagged(_)) => {
                    let close = CloseFrame {
                        code: 1013,
                        reason: "subscriber fell behind; reconnect for a fresh snapshot".into(),
                    };
                    let _ = socket.send(Message::Close(Some(close))).await;
                    return;
                }
                Err(RecvError::Closed) => return,
            },
            msg = socket.recv() => match msg {
                Some(Ok(Message::Close(_))) | Some(Err(_)) | None => return,
                Some(Ok(_)) => {}
            },
        }
    }
}
