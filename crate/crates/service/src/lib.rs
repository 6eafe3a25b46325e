//! Stateless HTTP front end to the simulator.
//!
//! Two routes, JSON both ways:
//!
//! * `GET /api/presets` lists every preset with its full parameter record.
//! * `POST /api/simulate` takes a [`SimulateRequest`] and returns the same
//!   bytes the CLI writes to `simulation.json` for the same effective inputs.
//!
//! Errors use `{"error", "field"?, "detail"}`: 400 for validation failures,
//! 422 with `failure_time` when integration fails.

use std::future::Future;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State as AppState;
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use kdyn_core::api::{simulate, FieldError, SimulateRequest};
use kdyn_core::scenario::{builtin_presets, load_scenario_file, ScenarioPreset};
use kdyn_core::{ModelParams, ScenarioError, State};
use serde::Serialize;
use tower_http::cors::{AllowOrigin, CorsLayer};

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("cannot read preset directory {path}: {source}")]
    PresetDir { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Preset(#[from] ScenarioError),
    #[error("preset '{name}' in {path} clashes with an existing preset")]
    DuplicatePreset { name: String, path: PathBuf },
    #[error("invalid CORS origin '{0}'")]
    BadOrigin(String),
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: SocketAddr, source: std::io::Error },
    #[error("server error: {0}")]
    Serve(std::io::Error),
}

#[derive(Debug, Clone, Default)]
pub struct ServiceConfig {
    /// Extra `*.toml` scenario files served after the built-ins.
    pub preset_dir: Option<PathBuf>,
    /// Origins allowed to call the API from a browser; `*` allows any.
    pub cors_origins: Vec<String>,
}

/// Built-in presets followed by the scenario files in `dir`, sorted by file
/// name. Names must be unique.
pub fn load_presets(dir: Option<&Path>) -> Result<Vec<ScenarioPreset>, ServiceError> {
    let mut presets = builtin_presets();
    let Some(dir) = dir else { return Ok(presets) };
    let io_err = |source| ServiceError::PresetDir { path: dir.to_path_buf(), source };
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io_err)? {
        let path = entry.map_err(io_err)?.path();
        if path.extension().is_some_and(|e| e == "toml") && path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    for path in files {
        let p = load_scenario_file(&path)?;
        if presets.iter().any(|q| q.name == p.name) {
            return Err(ServiceError::DuplicatePreset { name: p.name, path });
        }
        presets.push(p);
    }
    Ok(presets)
}

#[derive(Serialize)]
struct PresetSummary<'a> {
    name: &'a str,
    label: &'a str,
    params: &'a ModelParams,
    y0: &'a State,
    t_end: u32,
}

struct Shared {
    presets: Vec<ScenarioPreset>,
    /// Rendered once; the preset table never changes while serving.
    presets_json: String,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    field: Option<&'a str>,
    detail: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    failure_time: Option<f64>,
}

fn json(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn error(status: StatusCode, body: ErrorBody<'_>) -> Response {
    json(status, serde_json::to_string(&body).expect("error body serializes"))
}

fn invalid(e: &FieldError) -> Response {
    error(
        StatusCode::BAD_REQUEST,
        ErrorBody { error: "invalid_request", field: Some(&e.field), detail: &e.detail, failure_time: None },
    )
}

fn cors_layer(origins: &[String]) -> Result<Option<CorsLayer>, ServiceError> {
    if origins.is_empty() {
        return Ok(None);
    }
    let allow = if origins.iter().any(|o| o == "*") {
        AllowOrigin::any()
    } else {
        let values = origins
            .iter()
            .map(|o| HeaderValue::from_str(o).map_err(|_| ServiceError::BadOrigin(o.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        AllowOrigin::list(values)
    };
    Ok(Some(
        CorsLayer::new()
            .allow_origin(allow)
            .allow_methods([Method::GET, Method::POST])
            .allow_headers([header::CONTENT_TYPE]),
    ))
}

pub fn router(presets: Vec<ScenarioPreset>, cors_origins: &[String]) -> Result<Router, ServiceError> {
    let summaries: Vec<PresetSummary<'_>> = presets
        .iter()
        .map(|p| PresetSummary { name: &p.name, label: &p.label, params: &p.params, y0: &p.y0, t_end: p.config.t_end })
        .collect();
    let presets_json = serde_json::to_string(&summaries).expect("presets serialize");
    let shared = Arc::new(Shared { presets, presets_json });
    let app = Router::new()
        .route("/api/presets", get(handle_presets))
        .route("/api/simulate", post(handle_simulate))
        .with_state(shared);
    Ok(match cors_layer(cors_origins)? {
        Some(cors) => app.layer(cors),
        None => app,
    })
}

/// Router for `config`: built-ins plus the preset directory, if any.
pub fn app(config: &ServiceConfig) -> Result<Router, ServiceError> {
    router(load_presets(config.preset_dir.as_deref())?, &config.cors_origins)
}

async fn handle_presets(AppState(shared): AppState<Arc<Shared>>) -> Response {
    json(StatusCode::OK, shared.presets_json.clone())
}

async fn handle_simulate(AppState(shared): AppState<Arc<Shared>>, body: Bytes) -> Response {
    let Ok(text) = std::str::from_utf8(&body) else {
        return invalid(&FieldError { field: "body".into(), detail: "body is not UTF-8".into() });
    };
    let run = match SimulateRequest::from_json(text).and_then(|r| r.resolve(&shared.presets)) {
        Ok(run) => run,
        Err(e) => return invalid(&e),
    };
    match tokio::task::spawn_blocking(move || simulate(&run)).await {
        Ok(Ok(resp)) => json(StatusCode::OK, resp.to_json()),
        Ok(Err(e)) => error(
            StatusCode::UNPROCESSABLE_ENTITY,
            ErrorBody {
                error: "integration_failed",
                field: None,
                detail: &e.to_string(),
                failure_time: e.failure_time(),
            },
        ),
        Err(e) => error(
            StatusCode::INTERNAL_SERVER_ERROR,
            ErrorBody { error: "internal", field: None, detail: &e.to_string(), failure_time: None },
        ),
    }
}

/// Serves until `shutdown` resolves, then lets in-flight requests finish.
pub async fn serve(
    listener: tokio::net::TcpListener,
    app: Router,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> Result<(), ServiceError> {
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await.map_err(ServiceError::Serve)
}

/// Ctrl-C, or SIGTERM on Unix.
pub async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {},
        _ = term => {},
    }
}

/// Binds `addr` and serves until interrupted. Blocks the calling thread.
/// `on_bound` receives the bound address (useful with port 0).
pub fn run(addr: SocketAddr, config: &ServiceConfig, on_bound: impl FnOnce(SocketAddr)) -> Result<(), ServiceError> {
    let app = app(config)?;
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().map_err(ServiceError::Serve)?;
    rt.block_on(async {
        let listener =
            tokio::net::TcpListener::bind(addr).await.map_err(|source| ServiceError::Bind { addr, source })?;
        let local = listener.local_addr().map_err(ServiceError::Serve)?;
        log::info!("listening on http://{local}");
        on_bound(local);
        serve(listener, app, shutdown_signal()).await
    })
}
