//! Local audit API: recognition, highlighting and live dictionary editing.
//!
//! Reads take the current immutable snapshot (model plus compiled matcher)
//! at request start; edits are serialized through one lock and publish a new
//! snapshot when they succeed. Submitted texts are never logged or stored.

use std::collections::VecDeque;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, patch, post};
use axum::Router;
use heterarch::model::ModelMeta;
use heterarch::render::render_html;
use heterarch::{
    diff_models, highlight, load_model, save_model, tokenize, Backend, Engine, Error, Label, Model, NGram,
    RecognitionConfig,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::cors::{AllowOrigin, CorsLayer};

pub const UNDO_DEPTH: usize = 1000;
pub const DEFAULT_PAGE_SIZE: usize = 50;
pub const MAX_PAGE_SIZE: usize = 1000;

struct Snapshot {
    model: Arc<Model>,
    engine: Engine,
}

#[derive(Debug, Clone, Serialize)]
struct EditOp {
    distortion: Label,
    ngram: NGram,
    before: Option<f64>,
    after: Option<f64>,
}

struct Session {
    baseline: Arc<Model>,
    working: Arc<Model>,
    undo: VecDeque<EditOp>,
    source: Option<PathBuf>,
}

pub struct AppState {
    backend: Backend,
    snapshot: RwLock<Option<Arc<Snapshot>>>,
    session: tokio::sync::Mutex<Option<Session>>,
}

impl AppState {
    pub fn new(backend: Backend) -> Arc<Self> {
        Arc::new(AppState { backend, snapshot: RwLock::new(None), session: tokio::sync::Mutex::new(None) })
    }

    pub fn with_model(model: Model, source: Option<PathBuf>, backend: Backend) -> Arc<Self> {
        let state = AppState::new(backend);
        let session = state.open(model, source);
        *state.session.try_lock().expect("fresh state") = Some(session);
        state
    }

    fn open(&self, model: Model, source: Option<PathBuf>) -> Session {
        let model = Arc::new(model);
        self.publish(&model);
        Session { baseline: model.clone(), working: model, undo: VecDeque::new(), source }
    }

    fn publish(&self, model: &Arc<Model>) {
        let snap = Snapshot { model: model.clone(), engine: Engine::new(model, self.backend) };
        *self.snapshot.write().expect("snapshot lock") = Some(Arc::new(snap));
    }

    fn snapshot(&self) -> Result<Arc<Snapshot>, ApiError> {
        self.snapshot.read().expect("snapshot lock").clone().ok_or_else(no_model)
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError { status, message: message.into() }
    }
}

fn no_model() -> ApiError {
    ApiError::new(StatusCode::CONFLICT, "no model loaded")
}

fn bad_request(message: impl Into<String>) -> ApiError {
    ApiError::new(StatusCode::BAD_REQUEST, message)
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::UnknownDistortion(_) => StatusCode::NOT_FOUND,
            Error::WeightOutOfRange(_) | Error::InvalidNGram(_) | Error::InvalidLabel(_) | Error::InvalidModel(_) => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            Error::Io { .. } => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        ApiError::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, json_body(json!({ "error": self.message }).to_string())).into_response()
    }
}

fn json_body(body: String) -> impl IntoResponse {
    ([(header::CONTENT_TYPE, HeaderValue::from_static("application/json"))], body)
}

fn json_value(v: &impl Serialize) -> Response {
    json_body(serde_json::to_string(v).expect("plain data serializes")).into_response()
}

fn parse<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| bad_request(format!("malformed body: {e}")))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecognizeRequest {
    text: String,
    #[serde(default, alias = "DT")]
    dt: Option<f64>,
    #[serde(default)]
    weighted: Option<bool>,
    #[serde(default)]
    log_scaling: Option<bool>,
    #[serde(default)]
    cross_sentence: Option<bool>,
}

impl RecognizeRequest {
    fn config(&self) -> Result<RecognitionConfig, ApiError> {
        let d = RecognitionConfig::default();
        let dt = self.dt.unwrap_or(d.detection_threshold);
        if !(0.0..=100.0).contains(&dt) {
            return Err(bad_request(format!("dt {dt} is outside 0..=100")));
        }
        Ok(RecognitionConfig {
            detection_threshold: dt,
            weighted: self.weighted.unwrap_or(d.weighted),
            log_scaling: self.log_scaling.unwrap_or(d.log_scaling),
            cross_sentence: self.cross_sentence.unwrap_or(d.cross_sentence),
        })
    }
}

async fn recognize(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let req: RecognizeRequest = parse(&body)?;
    let cfg = req.config()?;
    let snap = state.snapshot()?;
    Ok(json_body(snap.engine.recognize(&tokenize(&req.text), &cfg).to_json()).into_response())
}

async fn highlight_text(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let req: RecognizeRequest = parse(&body)?;
    let cfg = req.config()?;
    let snap = state.snapshot()?;
    let result = snap.engine.recognize(&tokenize(&req.text), &cfg);
    let h = highlight(&result, true);
    let detected: Vec<_> = h.iter().filter(|x| x.detected).cloned().collect();
    Ok(json_value(&json!({
        "highlights": h,
        "html": render_html(&req.text, &detected, true),
    })))
}

#[derive(Debug, Deserialize)]
struct ModelQuery {
    distortion: Option<String>,
    q: Option<String>,
    page: Option<usize>,
    per_page: Option<usize>,
}

#[derive(Debug, Serialize)]
struct EntryRow {
    distortion: String,
    ngram: String,
    weight: f64,
}

async fn get_model(State(state): State<Arc<AppState>>, Query(q): Query<ModelQuery>) -> Result<Response, ApiError> {
    let snap = state.snapshot()?;
    let model = &snap.model;
    let dicts: Vec<_> = match &q.distortion {
        Some(name) => {
            let label = Label::new(name).map_err(|_| ApiError::new(StatusCode::NOT_FOUND, format!("unknown distortion {name:?}")))?;
            vec![model.dictionary(&label).ok_or_else(|| ApiError::from(Error::UnknownDistortion(name.clone())))?]
        }
        None => model.dictionaries().iter().collect(),
    };
    let needle = q.q.as_deref().map(str::to_lowercase).unwrap_or_default();
    let per_page = q.per_page.unwrap_or(DEFAULT_PAGE_SIZE).clamp(1, MAX_PAGE_SIZE);
    let page = q.page.unwrap_or(1).max(1);
    let mut total = 0;
    let mut rows = Vec::new();
    for d in dicts {
        for (ngram, weight) in d.ranked() {
            if !ngram.contains(&needle) {
                continue;
            }
            if total >= (page - 1) * per_page && rows.len() < per_page {
                rows.push(EntryRow { distortion: d.label.to_string(), ngram, weight });
            }
            total += 1;
        }
    }
    let edits = state.session.lock().await.as_ref().map_or(0, |s| s.undo.len());
    let labels: Vec<Value> =
        model.dictionaries().iter().map(|d| json!({"distortion": d.label, "entries": d.len()})).collect();
    Ok(json_value(&json!({
        "labels": labels,
        "meta": model.meta,
        "entries_total": model.entry_count(),
        "total": total,
        "page": page,
        "per_page": per_page,
        "entries": rows,
        "edits": edits,
    })))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PatchRequest {
    distortion: String,
    ngram: String,
    weight: Option<f64>,
}

async fn patch_entry(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let value: Value = parse(&body)?;
    if value.get("weight").is_none() {
        return Err(bad_request("`weight` is required (a number, or null to delete)"));
    }
    let req: PatchRequest = serde_json::from_value(value).map_err(|e| bad_request(format!("malformed body: {e}")))?;
    let label = Label::new(&req.distortion)
        .map_err(|_| ApiError::from(Error::UnknownDistortion(req.distortion.clone())))?;
    let ngram = NGram::from_phrase(&req.ngram)?;

    let mut guard = state.session.lock().await;
    let session = guard.as_mut().ok_or_else(no_model)?;
    let edit = session.working.edit_entry(&label, ngram.clone(), req.weight)?;
    if edit.missing_entry {
        return Err(ApiError::new(StatusCode::NOT_FOUND, format!("{label} has no entry {ngram:?}")));
    }
    session.working = Arc::new(edit.model);
    state.publish(&session.working);
    session.undo.push_back(EditOp { distortion: label.clone(), ngram: ngram.clone(), before: edit.previous, after: req.weight });
    if session.undo.len() > UNDO_DEPTH {
        session.undo.pop_front();
    }
    Ok(json_value(&json!({
        "distortion": label,
        "ngram": ngram.to_string(),
        "previous": edit.previous,
        "weight": req.weight,
        "entries_total": session.working.entry_count(),
        "edits": session.undo.len(),
    })))
}

async fn undo(State(state): State<Arc<AppState>>) -> Result<Response, ApiError> {
    let mut guard = state.session.lock().await;
    let session = guard.as_mut().ok_or_else(no_model)?;
    let op = session.undo.back().cloned().ok_or_else(|| ApiError::new(StatusCode::CONFLICT, "nothing to undo"))?;
    let edit = session.working.edit_entry(&op.distortion, op.ngram.clone(), op.before)?;
    session.working = Arc::new(edit.model);
    session.undo.pop_back();
    state.publish(&session.working);
    Ok(json_value(&json!({ "undone": op, "edits": session.undo.len() })))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DirRequest {
    dir: Option<PathBuf>,
}

async fn save(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let req: DirRequest = if body.is_empty() { DirRequest::default() } else { parse(&body)? };
    let guard = state.session.lock().await;
    let session = guard.as_ref().ok_or_else(no_model)?;
    let dir = req
        .dir
        .or_else(|| session.source.clone())
        .ok_or_else(|| bad_request("no target directory: pass {\"dir\": ...}"))?;
    let mut model = (*session.working).clone();
    model.meta.created_by = Some(format!("audit edit of {}", session.source.as_deref().map_or("unsaved model".into(), |p| p.display().to_string())));
    save_model(&model, &dir)?;
    Ok(json_value(&json!({ "dir": dir, "entries_total": model.entry_count() })))
}

async fn load(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let req: DirRequest = parse(&body)?;
    let dir = req.dir.ok_or_else(|| bad_request("`dir` is required"))?;
    if !dir.is_dir() {
        return Err(ApiError::new(StatusCode::NOT_FOUND, format!("model directory {} does not exist", dir.display())));
    }
    let model = load_model(&dir)?;
    let mut guard = state.session.lock().await;
    let summary = json!({ "dir": dir, "entries_total": model.entry_count(), "labels": model.labels() });
    *guard = Some(state.open(model, Some(dir)));
    Ok(json_value(&summary))
}

async fn diff(State(state): State<Arc<AppState>>) -> Result<Response, ApiError> {
    let guard = state.session.lock().await;
    let session = guard.as_ref().ok_or_else(no_model)?;
    let d = diff_models(&session.baseline, &session.working)?;
    Ok(json_value(&json!({ "changes": d.change_count(), "dictionaries": d.dictionaries })))
}

async fn health(State(state): State<Arc<AppState>>) -> Response {
    let meta = state.snapshot().ok().map(|s| s.model.meta.clone());
    json_value(&json!({ "model_loaded": meta.is_some(), "backend": state.backend, "meta": meta.unwrap_or_else(ModelMeta::default) }))
}

fn is_local_origin(origin: &HeaderValue) -> bool {
    let Ok(s) = origin.to_str() else { return false };
    let rest = s.strip_prefix("http://").or_else(|| s.strip_prefix("https://")).unwrap_or("");
    let host = if rest.starts_with('[') {
        rest.split(']').next().map(|h| format!("{h}]")).unwrap_or_default()
    } else {
        rest.split(':').next().unwrap_or("").to_owned()
    };
    matches!(host.as_str(), "localhost" | "127.0.0.1" | "[::1]")
}

pub fn router(state: Arc<AppState>) -> Router {
    let cors = CorsLayer::new()
        .allow_origin(AllowOrigin::predicate(|origin, _| is_local_origin(origin)))
        .allow_methods([Method::GET, Method::POST, Method::PATCH])
        .allow_headers([header::CONTENT_TYPE]);
    Router::new()
        .route("/health", get(health))
        .route("/recognize", post(recognize))
        .route("/highlight", post(highlight_text))
        .route("/model", get(get_model))
        .route("/model/entries", patch(patch_entry))
        .route("/model/undo", post(undo))
        .route("/model/save", post(save))
        .route("/model/load", post(load))
        .route("/model/diff", get(diff))
        .layer(cors)
        .with_state(state)
}

pub async fn serve(state: Arc<AppState>, addr: SocketAddr) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
