//! HTTP generation service.
//!
//! - `POST /api/generate`: JSON `{seed_notes?, seconds?, temperature?,
//!   rng_seed?}` in, `audio/midi` out. 400 on a bad body, 429 when all
//!   generation slots are busy, 503 until the model has loaded.
//! - `GET /api/health`: status, whether the model is loaded and its dims.
//! - `/`: the studio UI from `static_dir`, or a short placeholder page.
//!
//! Generation runs on the blocking pool, so health checks stay responsive
//! while every slot is busy.

use std::io;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, OnceLock};

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use melodyforge_core::checkpoint::ModelCheckpoint;
use melodyforge_core::generator::generate_to_midi;
use serde_json::json;
use tokio::net::TcpListener;
use tokio::sync::Semaphore;
use tower_http::services::ServeDir;

use crate::files::read_checkpoint;
use crate::request::{resolve_request, RequestFields};

pub const GENERATION_ID_HEADER: &str = "x-generation-id";
pub const RNG_SEED_HEADER: &str = "x-rng-seed";

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub model_path: PathBuf,
    pub bind: SocketAddr,
    pub max_concurrent: usize,
    pub max_seconds: f64,
    /// Built studio UI, served at `/`.
    pub static_dir: Option<PathBuf>,
}

impl ServiceConfig {
    pub const DEFAULT_MAX_CONCURRENT: usize = 4;
    pub const DEFAULT_MAX_SECONDS: f64 = 300.0;

    pub fn new(model_path: PathBuf) -> Self {
        ServiceConfig {
            model_path,
            bind: SocketAddr::from(([127, 0, 0, 1], 8080)),
            max_concurrent: Self::DEFAULT_MAX_CONCURRENT,
            max_seconds: Self::DEFAULT_MAX_SECONDS,
            static_dir: None,
        }
    }
}

struct Shared {
    model: OnceLock<Arc<ModelCheckpoint>>,
    load_error: Mutex<Option<String>>,
    slots: Arc<Semaphore>,
    max_concurrent: usize,
    max_seconds: f64,
    next_id: AtomicU64,
}

/// Service state shared by all handlers. The model is set once and never
/// changed afterwards.
#[derive(Clone)]
pub struct AppState {
    shared: Arc<Shared>,
}

impl AppState {
    pub fn new(max_concurrent: usize, max_seconds: f64) -> Self {
        assert!(max_concurrent > 0 && max_seconds > 0.0, "service limits must be positive");
        AppState {
            shared: Arc::new(Shared {
                model: OnceLock::new(),
                load_error: Mutex::new(None),
                slots: Arc::new(Semaphore::new(max_concurrent)),
                max_concurrent,
                max_seconds,
                next_id: AtomicU64::new(1),
            }),
        }
    }

    /// Installs the model; returns false if one was already installed.
    pub fn set_model(&self, model: ModelCheckpoint) -> bool {
        self.shared.model.set(Arc::new(model)).is_ok()
    }

    pub fn model(&self) -> Option<Arc<ModelCheckpoint>> {
        self.shared.model.get().cloned()
    }

    pub fn set_load_error(&self, message: String) {
        *self.shared.load_error.lock().unwrap_or_else(|e| e.into_inner()) = Some(message);
    }

    fn load_error(&self) -> Option<String> {
        self.shared.load_error.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }

    pub fn active_generations(&self) -> usize {
        self.shared.max_concurrent - self.shared.slots.available_permits()
    }
}

fn error_response(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(json!({ "error": message.into() }))).into_response()
}

async fn generate(State(state): State<AppState>, body: Bytes) -> Response {
    let Some(model) = state.model() else {
        let msg = match state.load_error() {
            Some(e) => format!("model failed to load: {e}"),
            None => "model is still loading".to_string(),
        };
        return error_response(StatusCode::SERVICE_UNAVAILABLE, msg);
    };
    let fields: RequestFields = if body.iter().all(u8::is_ascii_whitespace) {
        RequestFields::default()
    } else {
        match serde_json::from_slice(&body) {
            Ok(f) => f,
            Err(e) => return error_response(StatusCode::BAD_REQUEST, format!("malformed JSON: {e}")),
        }
    };
    let req = match resolve_request(&fields, state.shared.max_seconds) {
        Ok(r) => r,
        Err(e) => return error_response(StatusCode::BAD_REQUEST, e.to_string()),
    };
    let Ok(permit) = state.shared.slots.clone().try_acquire_owned() else {
        return error_response(StatusCode::TOO_MANY_REQUESTS, "all generation slots are busy");
    };
    let id = state.shared.next_id.fetch_add(1, Ordering::Relaxed);
    let rng_seed = req.rng_seed;
    let result = tokio::task::spawn_blocking(move || {
        let _permit = permit;
        generate_to_midi(&req, &model)
    })
    .await;
    match result {
        Ok(Ok(bytes)) => {
            let headers = [
                (header::CONTENT_TYPE, HeaderValue::from_static("audio/midi")),
                (
                    header::CONTENT_DISPOSITION,
                    HeaderValue::from_str(&format!("attachment; filename=\"melodyforge-{id}.mid\"")).expect("ascii"),
                ),
                (header::HeaderName::from_static(GENERATION_ID_HEADER), HeaderValue::from(id)),
                (header::HeaderName::from_static(RNG_SEED_HEADER), HeaderValue::from(rng_seed)),
            ];
            (StatusCode::OK, headers, bytes).into_response()
        }
        Ok(Err(e)) => error_response(StatusCode::BAD_REQUEST, e.to_string()),
        Err(e) => error_response(StatusCode::INTERNAL_SERVER_ERROR, format!("generation task failed: {e}")),
    }
}

async fn health(State(state): State<AppState>) -> Json<serde_json::Value> {
    let model = state.model();
    let dims = model.as_ref().map(|m| {
        let d = m.dims();
        json!({ "vocab": d.vocab, "hidden": d.hidden, "decoder_hidden": d.decoder_hidden() })
    });
    let error = state.load_error();
    Json(json!({
        "status": if error.is_some() { "error" } else { "ok" },
        "model_loaded": model.is_some(),
        "dims": dims,
        "active_generations": state.active_generations(),
        "max_concurrent": state.shared.max_concurrent,
        "error": error,
    }))
}

const PLACEHOLDER_PAGE: &str = "<!doctype html>
<html><head><meta charset=\"utf-8\"><title>melodyforge</title></head>
<body>
<h1>melodyforge</h1>
<p>The studio UI is not installed. Start the service with <code>--static-dir</code> pointing at a built UI.</p>
<p>API: <code>POST /api/generate</code> with JSON <code>{\"seed_notes\":\"A4\",\"seconds\":120,\"temperature\":1.0,\"rng_seed\":7}</code>
returns <code>audio/midi</code>; <code>GET /api/health</code> reports status.</p>
</body></html>
";

pub fn router(state: AppState, static_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/api/generate", post(generate))
        .route("/api/health", get(health))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(|| async { Html(PLACEHOLDER_PAGE) })),
    }
}

/// Reads the checkpoint on the blocking pool and installs it in `state`.
pub fn spawn_model_load(state: AppState, path: PathBuf) -> tokio::task::JoinHandle<()> {
    tokio::task::spawn_blocking(move || match read_checkpoint(&path) {
        Ok(model) => {
            let d = model.dims();
            eprintln!("model loaded from {} (hidden {}, vocab {})", path.display(), d.hidden, d.vocab);
            state.set_model(model);
        }
        Err(e) => {
            eprintln!("error: {e}");
            state.set_load_error(e.to_string());
        }
    })
}

/// Serves on `listener` until `shutdown` resolves.
pub async fn run(
    listener: TcpListener,
    state: AppState,
    static_dir: Option<PathBuf>,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> io::Result<()> {
    axum::serve(listener, router(state, static_dir.as_deref()))
        .with_graceful_shutdown(shutdown)
        .await
}

/// Binds, starts loading the model and serves until Ctrl-C.
pub async fn serve(config: ServiceConfig) -> io::Result<()> {
    let listener = TcpListener::bind(config.bind).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    let state = AppState::new(config.max_concurrent, config.max_seconds);
    spawn_model_load(state.clone(), config.model_path.clone());
    run(listener, state, config.static_dir, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await
}
