//! HTTP front end for the annotation pipeline.
//!
//! Every endpoint is stateless: uploads arrive as multipart form fields, are
//! processed in memory by the same workflow functions the command line uses,
//! and the response carries the resulting bytes. Nothing touches the disk.
//!
//! | endpoint                 | fields                                  | response              |
//! |--------------------------|-----------------------------------------|-----------------------|
//! | `POST /api/distribute`   | `data` CSV, `spec` JSON                 | ZIP                   |
//! | `POST /api/compile`      | `archive` ZIP, `options`/`renames` JSON | compiled CSV          |
//! | `POST /api/labels`       | `data` CSV, `config` JSON               | labelled CSV          |
//! | `POST /api/reliability`  | `data` CSV, `config` JSON               | report JSON           |
//! | `POST /api/redistribute` | `data` CSV, `spec` JSON                 | ZIP                   |
//! | `GET /api/health`        |                                         | `{status, version}`   |
//!
//! Heavy jobs run on blocking threads behind a semaphore of `WORKERS`
//! permits, so the health endpoint stays responsive while they run.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use annorel_core::compilation::{pack_archive, CompileOptions};
use annorel_core::pipeline::{
    json_bytes, run_compile, run_distribute, run_labels, run_redistribute, run_reliability, Bundle,
    DistributeRequest, LabelsRequest, RedistributeRequest, ReliabilityRequest, COMPILED_FILE, LABELLED_FILE,
};
use annorel_core::{Error, Execution};
use axum::extract::multipart::MultipartError;
use axum::extract::{DefaultBodyLimit, Multipart, State};
use axum::http::{header, HeaderMap, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::{json, Value};
use tokio::sync::Semaphore;
use tower_http::cors::{Any, CorsLayer};

pub const WARNINGS_HEADER: &str = "x-annorel-warnings";

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub port: u16,
    pub max_upload_bytes: usize,
    /// Concurrent heavy jobs.
    pub workers: usize,
    pub timeout: Duration,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            port: 8080,
            max_upload_bytes: 200 * 1024 * 1024,
            workers: std::thread::available_parallelism().map_or(2, |n| n.get()),
            timeout: Duration::from_secs(15 * 60),
        }
    }
}

impl ServiceConfig {
    /// Reads `PORT`, `MAX_UPLOAD_MB`, `WORKERS` and `REQUEST_TIMEOUT_SECS`,
    /// falling back to the defaults for unset variables.
    pub fn from_env() -> Result<Self, String> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Self, String> {
        fn parse<T: std::str::FromStr>(key: &str, raw: Option<String>) -> Result<Option<T>, String> {
            raw.map(|v| v.trim().parse().map_err(|_| format!("{key}={v:?} is not a valid number"))).transpose()
        }
        let mut config = Self::default();
        if let Some(port) = parse("PORT", get("PORT"))? {
            config.port = port;
        }
        if let Some(mb) = parse::<usize>("MAX_UPLOAD_MB", get("MAX_UPLOAD_MB"))? {
            config.max_upload_bytes = mb * 1024 * 1024;
        }
        if let Some(workers) = parse::<usize>("WORKERS", get("WORKERS"))? {
            if workers == 0 {
                return Err("WORKERS must be at least 1".into());
            }
            config.workers = workers;
        }
        if let Some(secs) = parse("REQUEST_TIMEOUT_SECS", get("REQUEST_TIMEOUT_SECS"))? {
            config.timeout = Duration::from_secs(secs);
        }
        Ok(config)
    }
}

#[derive(Clone)]
struct AppState {
    jobs: Arc<Semaphore>,
    timeout: Duration,
}

pub fn router(config: &ServiceConfig) -> Router {
    let state = AppState { jobs: Arc::new(Semaphore::new(config.workers)), timeout: config.timeout };
    let cors = CorsLayer::new().allow_origin(Any).allow_methods([Method::GET, Method::POST]).allow_headers(Any);
    Router::new()
        .route("/api/health", get(health))
        .route("/api/distribute", post(distribute))
        .route("/api/compile", post(compile))
        .route("/api/labels", post(labels))
        .route("/api/reliability", post(reliability))
        .route("/api/redistribute", post(redistribute))
        .layer(DefaultBodyLimit::max(config.max_upload_bytes))
        .layer(cors)
        .with_state(state)
}

/// Serves on an already bound listener until ctrl-c.
pub async fn serve(listener: tokio::net::TcpListener, config: ServiceConfig) -> std::io::Result<()> {
    axum::serve(listener, router(&config))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

/// Binds `0.0.0.0:<port>` and serves on a fresh multi-threaded runtime.
pub fn serve_blocking(config: ServiceConfig) -> std::io::Result<()> {
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(SocketAddr::from(([0, 0, 0, 0], config.port))).await?;
        eprintln!("listening on {}", listener.local_addr()?);
        serve(listener, config).await
    })
}

// -------------------------------------------------------------------- errors

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: String,
    message: String,
    stuck: Option<Vec<String>>,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self { status, code: code.to_owned(), message: message.into(), stuck: None }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Infeasible { .. } => StatusCode::CONFLICT,
            Error::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::BAD_REQUEST,
        };
        let mut err = ApiError::new(status, e.code(), e.to_string());
        if let Error::Infeasible { stuck } = e {
            err.stuck = Some(stuck);
        }
        err
    }
}

impl From<MultipartError> for ApiError {
    fn from(e: MultipartError) -> Self {
        let status = e.status();
        let code = if status == StatusCode::PAYLOAD_TOO_LARGE { "PayloadTooLarge" } else { "BadMultipart" };
        ApiError::new(status, code, e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.message, "code": self.code });
        if let Some(stuck) = self.stuck {
            body["stuck"] = json!(stuck);
        }
        (self.status, Json(body)).into_response()
    }
}

// ------------------------------------------------------------------- helpers

struct Form(BTreeMap<String, Vec<u8>>);

impl Form {
    async fn read(mut multipart: Multipart) -> Result<Self, ApiError> {
        let mut fields = BTreeMap::new();
        while let Some(field) = multipart.next_field().await? {
            let name = field.name().unwrap_or_default().to_owned();
            let bytes = field.bytes().await?;
            fields.insert(name, bytes.to_vec());
        }
        Ok(Form(fields))
    }

    fn take(&mut self, name: &str) -> Result<Vec<u8>, ApiError> {
        self.0
            .remove(name)
            .ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, "MissingField", format!("missing form field {name:?}")))
    }

    /// Parses an optional JSON field; absent means the type's default.
    fn json<T: serde::de::DeserializeOwned + Default>(&mut self, name: &str) -> Result<T, ApiError> {
        match self.0.remove(name) {
            Some(bytes) => Ok(serde_json::from_slice(&bytes).map_err(Error::from)?),
            None => Ok(T::default()),
        }
    }

    fn required_json<T: serde::de::DeserializeOwned>(&mut self, name: &str) -> Result<T, ApiError> {
        let bytes = self.take(name)?;
        Ok(serde_json::from_slice(&bytes).map_err(Error::from)?)
    }
}

/// Runs a workflow on the blocking pool once a worker permit is free. The
/// permit moves into the job, so an abandoned (timed out) job still counts
/// against the limit until it actually finishes.
async fn run_job<F>(state: &AppState, job: F) -> Result<Bundle, ApiError>
where
    F: FnOnce() -> annorel_core::Result<Bundle> + Send + 'static,
{
    let work = async {
        let permit = state.jobs.clone().acquire_owned().await.expect("semaphore is never closed");
        tokio::task::spawn_blocking(move || {
            let _permit = permit;
            job()
        })
        .await
    };
    match tokio::time::timeout(state.timeout, work).await {
        Err(_) => Err(ApiError::new(StatusCode::GATEWAY_TIMEOUT, "Timeout", "request exceeded the processing timeout")),
        Ok(Err(join)) => Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", join.to_string())),
        Ok(Ok(result)) => Ok(result?),
    }
}

fn warnings_header(headers: &mut HeaderMap, warnings: &[String]) {
    if warnings.is_empty() {
        return;
    }
    let text: String = warnings
        .join(" | ")
        .chars()
        .map(|c| if c.is_ascii() && !c.is_ascii_control() { c } else { '?' })
        .collect();
    if let Ok(value) = HeaderValue::from_str(&text) {
        headers.insert(WARNINGS_HEADER, value);
    }
}

fn file_response(bundle: &Bundle, bytes: Vec<u8>, content_type: &'static str, filename: &str) -> Response {
    let mut headers = HeaderMap::new();
    headers.insert(header::CONTENT_TYPE, HeaderValue::from_static(content_type));
    if let Ok(v) = HeaderValue::from_str(&format!("attachment; filename=\"{filename}\"")) {
        headers.insert(header::CONTENT_DISPOSITION, v);
    }
    warnings_header(&mut headers, &bundle.warnings);
    (StatusCode::OK, headers, bytes).into_response()
}

fn zip_response(bundle: &Bundle, filename: &str) -> Result<Response, ApiError> {
    let zip = pack_archive(&bundle.files)?;
    Ok(file_response(bundle, zip, "application/zip", filename))
}

fn file_of(bundle: &Bundle, name: &str) -> Result<Vec<u8>, ApiError> {
    bundle
        .files
        .get(name)
        .cloned()
        .ok_or_else(|| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", format!("{name} was not produced")))
}

// ------------------------------------------------------------------ handlers

async fn health() -> Json<Value> {
    Json(json!({ "status": "ok", "version": annorel_core::VERSION }))
}

async fn distribute(State(state): State<AppState>, multipart: Multipart) -> Result<Response, ApiError> {
    let mut form = Form::read(multipart).await?;
    let data = form.take("data")?;
    let req: DistributeRequest = form.required_json("spec")?;
    let bundle = run_job(&state, move || run_distribute(&data, &req)).await?;
    zip_response(&bundle, "distribution.zip")
}

async fn compile(State(state): State<AppState>, multipart: Multipart) -> Result<Response, ApiError> {
    let mut form = Form::read(multipart).await?;
    let archive = form.take("archive")?;
    let mut options: CompileOptions = form.json("options")?;
    let renames: BTreeMap<String, String> = form.json("renames")?;
    options.renames.extend(renames);
    let bundle = run_job(&state, move || run_compile(&archive, &options)).await?;
    let csv = file_of(&bundle, COMPILED_FILE)?;
    Ok(file_response(&bundle, csv, "text/csv; charset=utf-8", COMPILED_FILE))
}

async fn labels(State(state): State<AppState>, multipart: Multipart) -> Result<Response, ApiError> {
    let mut form = Form::read(multipart).await?;
    let data = form.take("data")?;
    let req: LabelsRequest = form.json("config")?;
    let bundle = run_job(&state, move || run_labels(&data, &req, Execution::default())).await?;
    let csv = file_of(&bundle, LABELLED_FILE)?;
    Ok(file_response(&bundle, csv, "text/csv; charset=utf-8", LABELLED_FILE))
}

async fn reliability(State(state): State<AppState>, multipart: Multipart) -> Result<Response, ApiError> {
    let mut form = Form::read(multipart).await?;
    let data = form.take("data")?;
    let req: ReliabilityRequest = form.json("config")?;
    let bundle = run_job(&state, move || run_reliability(&data, &req, Execution::default())).await?;
    let body = json_bytes(&bundle.summary);
    Ok(file_response(&bundle, body, "application/json", "reliability.json"))
}

async fn redistribute(State(state): State<AppState>, multipart: Multipart) -> Result<Response, ApiError> {
    let mut form = Form::read(multipart).await?;
    let data = form.take("data")?;
    let req: RedistributeRequest = form.json("spec")?;
    let bundle = run_job(&state, move || run_redistribute(&data, &req)).await?;
    zip_response(&bundle, "redistribution.zip")
}
