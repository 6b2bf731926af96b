//! HTTP service over annotation sessions.
//!
//! Every session lives behind its own async mutex, so mutations on one
//! session are applied one at a time in arrival order while frame requests
//! go straight to the shared frame source. Request and response bodies are
//! JSON except frame images (PNG) and GT downloads (raw array bytes).

use std::collections::HashMap;
use std::io::Cursor;
use std::net::SocketAddr;
use std::path::{Component, Path, PathBuf};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post, put};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::{Mutex, RwLock};
use uuid::Uuid;

use crate::frame_source::{self, FrameSource, SourceError, SourceOptions};
use crate::geometry::{self, GeometryError, LineAnnotation, Point, ScaleFactor};
use crate::gt_format::{self, GtFormatError};
use crate::session::{self, Direction, SaveOutcome, Session, SessionError};

pub const DEFAULT_HOST: &str = "127.0.0.1";
pub const DEFAULT_PORT: u16 = 8750;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Canonical directory all video paths must resolve into.
    pub video_root: PathBuf,
    pub source: SourceOptions,
}

impl ServiceConfig {
    pub fn new(video_root: &Path) -> std::io::Result<Self> {
        Ok(Self {
            video_root: video_root.canonicalize()?,
            source: SourceOptions::default(),
        })
    }
}

pub struct SessionHandle {
    pub id: Uuid,
    pub created_at: DateTime<Utc>,
    source: Arc<dyn FrameSource>,
    session: Mutex<Session>,
}

impl SessionHandle {
    pub fn session(&self) -> &Mutex<Session> {
        &self.session
    }
}

#[derive(Clone)]
pub struct AppState {
    config: Arc<ServiceConfig>,
    sessions: Arc<RwLock<HashMap<Uuid, Arc<SessionHandle>>>>,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Self {
        Self {
            config: Arc::new(config),
            sessions: Arc::default(),
        }
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub async fn session(&self, id: &str) -> Result<Arc<SessionHandle>, ApiError> {
        let not_found = || {
            ApiError::new(
                StatusCode::NOT_FOUND,
                "session_not_found",
                format!("unknown session '{id}'"),
            )
        };
        let id = Uuid::parse_str(id).map_err(|_| not_found())?;
        self.sessions
            .read()
            .await
            .get(&id)
            .cloned()
            .ok_or_else(not_found)
    }

    /// Registers an already opened session, returning its id.
    pub async fn insert(&self, session: Session) -> Uuid {
        let id = Uuid::new_v4();
        let handle = SessionHandle {
            id,
            created_at: Utc::now(),
            source: session.source().clone(),
            session: Mutex::new(session),
        };
        self.sessions.write().await.insert(id, Arc::new(handle));
        id
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    fn unprocessable(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, code, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "code": self.code, "message": self.message });
        (self.status, Json(body)).into_response()
    }
}

impl From<GeometryError> for ApiError {
    fn from(e: GeometryError) -> Self {
        let code = match e {
            GeometryError::DegenerateLine { .. } => "degenerate_line",
            GeometryError::OutOfFrame { .. } => "out_of_frame",
            GeometryError::InvalidScale(_) => "invalid_scale",
            _ => "invalid_geometry",
        };
        Self::unprocessable(code, e.to_string())
    }
}

impl From<SourceError> for ApiError {
    fn from(e: SourceError) -> Self {
        let (status, code) = match &e {
            SourceError::UnsupportedFormat(_) => {
                (StatusCode::UNPROCESSABLE_ENTITY, "unsupported_format")
            }
            SourceError::NotFound(_) => (StatusCode::NOT_FOUND, "not_found"),
            SourceError::EmptySource(_) => (StatusCode::UNPROCESSABLE_ENTITY, "empty_source"),
            SourceError::InconsistentDims { .. } => {
                (StatusCode::UNPROCESSABLE_ENTITY, "inconsistent_dims")
            }
            SourceError::IndexOutOfRange { .. } => (StatusCode::NOT_FOUND, "frame_not_found"),
            SourceError::DecodeFailure(_) => (StatusCode::UNPROCESSABLE_ENTITY, "decode_failure"),
            SourceError::Io(_) => (StatusCode::INTERNAL_SERVER_ERROR, "io_failure"),
        };
        Self::new(status, code, e.to_string())
    }
}

impl From<GtFormatError> for ApiError {
    fn from(e: GtFormatError) -> Self {
        match e {
            GtFormatError::Io(io) => io_error(io),
            GtFormatError::LengthMismatch { .. } => {
                Self::unprocessable("length_mismatch", e.to_string())
            }
            other => Self::unprocessable("bad_gt_file", other.to_string()),
        }
    }
}

fn io_error(e: std::io::Error) -> ApiError {
    if e.kind() == std::io::ErrorKind::NotFound {
        ApiError::new(StatusCode::NOT_FOUND, "not_found", e.to_string())
    } else {
        ApiError::new(
            StatusCode::INTERNAL_SERVER_ERROR,
            "io_failure",
            e.to_string(),
        )
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::Geometry(g) => g.into(),
            SessionError::Format(f) => f.into(),
            SessionError::Io(io) => io_error(io),
            SessionError::NoPendingLine => {
                Self::new(StatusCode::CONFLICT, "no_pending_line", e.to_string())
            }
            SessionError::CurrentNotAnnotated => {
                Self::new(StatusCode::CONFLICT, "current_not_annotated", e.to_string())
            }
            SessionError::InvalidOffset(_) => Self::unprocessable("invalid_offset", e.to_string()),
            SessionError::InvalidThickness(_) => {
                Self::unprocessable("invalid_thickness", e.to_string())
            }
            SessionError::LengthMismatch { .. } => {
                Self::unprocessable("length_mismatch", e.to_string())
            }
            SessionError::IndexOutOfRange { .. } => {
                Self::unprocessable("index_out_of_range", e.to_string())
            }
            SessionError::UnusableRow { .. } => Self::unprocessable("bad_gt_file", e.to_string()),
            SessionError::GtFileNotFound { .. } => {
                Self::new(StatusCode::NOT_FOUND, "not_found", e.to_string())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineView {
    #[serde(rename = "Y")]
    pub y: f64,
    pub phi: f64,
    pub x_s: f64,
    pub y_s: f64,
    pub x_e: f64,
    pub y_e: f64,
}

impl From<&LineAnnotation> for LineView {
    fn from(l: &LineAnnotation) -> Self {
        Self {
            y: l.position,
            phi: l.tilt,
            x_s: l.start.x,
            y_s: l.start.y,
            x_e: l.end.x,
            y_e: l.end.y,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurrentView {
    #[serde(flatten)]
    pub line: LineView,
    pub hidden: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateView {
    pub cursor: usize,
    pub frame_count: usize,
    pub width: u32,
    pub height: u32,
    pub browse_offset: u32,
    pub thickness: u32,
    pub annotated_count: usize,
    pub dirty: bool,
    pub current: Option<CurrentView>,
    pub current_text: String,
    pub pending: Option<LineView>,
}

impl StateView {
    pub fn of(session: &Session) -> Self {
        let dims = session.info().dims;
        let slot = session.current_slot();
        Self {
            cursor: session.cursor(),
            frame_count: session.frame_count(),
            width: dims.width(),
            height: dims.height(),
            browse_offset: session.browse_offset(),
            thickness: session.thickness(),
            annotated_count: session.annotated_count(),
            dirty: session.is_dirty(),
            current: slot.annotation().map(|l| CurrentView {
                line: l.into(),
                hidden: slot.is_hidden(),
            }),
            current_text: session.current_annotation_text(),
            pending: session.pending_line().as_ref().map(LineView::from),
        }
    }
}

/// Rejects paths with `..` components or resolving outside `root`.
pub fn resolve_under_root(root: &Path, requested: &str) -> Result<PathBuf, ApiError> {
    let rel = Path::new(requested);
    if rel.components().any(|c| matches!(c, Component::ParentDir)) {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "path_outside_root",
            format!("'{requested}' escapes the video root"),
        ));
    }
    let joined = if rel.is_absolute() {
        rel.to_path_buf()
    } else {
        root.join(rel)
    };
    let canonical = match joined.canonicalize() {
        Ok(p) => p,
        Err(_) if rel.is_absolute() && !joined.starts_with(root) => {
            return Err(ApiError::new(
                StatusCode::BAD_REQUEST,
                "path_outside_root",
                format!("'{requested}' escapes the video root"),
            ))
        }
        Err(_) => {
            return Err(ApiError::new(
                StatusCode::NOT_FOUND,
                "not_found",
                format!("no such file: '{requested}'"),
            ))
        }
    };
    if !canonical.starts_with(root) {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "path_outside_root",
            format!("'{requested}' escapes the video root"),
        ));
    }
    Ok(canonical)
}

/// Relative GT paths resolve against the video root; absolute ones are used as given.
fn resolve_gt_path(root: &Path, requested: &str) -> PathBuf {
    let p = Path::new(requested);
    let base = if p.is_absolute() {
        p.to_path_buf()
    } else {
        root.join(p)
    };
    base.components()
        .filter(|c| !matches!(c, Component::CurDir))
        .collect()
}

fn parse_body<T: DeserializeOwned + Default>(body: &Bytes) -> Result<T, ApiError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    serde_json::from_slice(body)
        .map_err(|e| ApiError::bad_request(format!("invalid JSON body: {e}")))
}

fn check_cursor(session: &Session, expected: Option<usize>) -> Result<(), ApiError> {
    match expected {
        Some(c) if c != session.cursor() => Err(ApiError::new(
            StatusCode::CONFLICT,
            "stale_cursor",
            format!("expected cursor {c}, session is at {}", session.cursor()),
        )),
        _ => Ok(()),
    }
}

fn raw_setting(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

#[derive(Deserialize)]
struct CreateSession {
    video_path: String,
}

#[derive(Serialize)]
struct SessionCreated {
    id: Uuid,
    frame_count: usize,
    width: u32,
    height: u32,
    created_at: DateTime<Utc>,
}

async fn create_session(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let req: CreateSession = serde_json::from_slice(&body)
        .map_err(|e| ApiError::bad_request(format!("invalid JSON body: {e}")))?;
    let path = resolve_under_root(&state.config.video_root, &req.video_path)?;
    let options = state.config.source.clone();
    let source = tokio::task::spawn_blocking(move || frame_source::open_source(&path, &options))
        .await
        .map_err(|e| {
            ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string())
        })??;
    let info = source.info().clone();
    let id = state.insert(Session::open(source)).await;
    tracing::info!(%id, uri = %info.uri.display(), frames = info.frame_count, "session opened");
    let created_at = state.session(&id.to_string()).await?.created_at;
    let body = SessionCreated {
        id,
        frame_count: info.frame_count,
        width: info.dims.width(),
        height: info.dims.height(),
        created_at,
    };
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

async fn get_state(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<StateView>, ApiError> {
    let handle = state.session(&id).await?;
    let session = handle.session.lock().await;
    Ok(Json(StateView::of(&session)))
}

#[derive(Deserialize)]
struct FrameQuery {
    scale: Option<f64>,
}

async fn get_frame(
    State(state): State<AppState>,
    UrlPath((id, index)): UrlPath<(String, usize)>,
    Query(query): Query<FrameQuery>,
) -> Result<Response, ApiError> {
    let handle = state.session(&id).await?;
    let scale = ScaleFactor::new(query.scale.unwrap_or(1.0))?;
    let source = handle.source.clone();
    let png = tokio::task::spawn_blocking(move || -> Result<Vec<u8>, ApiError> {
        let frame = source.get_frame(index)?;
        let png = encode_png(&frame.pixels, scale)?;
        Ok(png)
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??;
    Ok(([(header::CONTENT_TYPE, "image/png")], png).into_response())
}

/// Size of a frame shown at `scale`.
pub fn scaled_size(width: u32, height: u32, scale: ScaleFactor) -> (u32, u32) {
    let s = scale.get();
    let side = |v: u32| ((f64::from(v) * s).round() as u32).max(1);
    (side(width), side(height))
}

fn encode_png(img: &image::RgbImage, scale: ScaleFactor) -> Result<Vec<u8>, ApiError> {
    let (w, h) = scaled_size(img.width(), img.height(), scale);
    let mut out = Cursor::new(Vec::new());
    let result = if (w, h) == img.dimensions() {
        img.write_to(&mut out, image::ImageFormat::Png)
    } else {
        image::imageops::resize(img, w, h, image::imageops::FilterType::Triangle)
            .write_to(&mut out, image::ImageFormat::Png)
    };
    result.map_err(|e| {
        ApiError::new(
            StatusCode::INTERNAL_SERVER_ERROR,
            "encode_failure",
            e.to_string(),
        )
    })?;
    Ok(out.into_inner())
}

#[derive(Deserialize, Clone, Copy, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
enum Space {
    Display,
    #[default]
    Original,
}

#[derive(Deserialize)]
struct PendingRequest {
    p1: Point,
    p2: Point,
    #[serde(default)]
    space: Space,
    scale: Option<f64>,
    expected_cursor: Option<usize>,
}

#[derive(Serialize)]
struct PendingResponse {
    original: LineView,
    display: LineView,
    scale: f64,
    state: StateView,
}

async fn set_pending(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Json<PendingResponse>, ApiError> {
    let req: PendingRequest = serde_json::from_slice(&body)
        .map_err(|e| ApiError::bad_request(format!("invalid JSON body: {e}")))?;
    let scale = match (req.space, req.scale) {
        (Space::Display, None) => {
            return Err(ApiError::unprocessable(
                "invalid_scale",
                "display-space points need a scale",
            ))
        }
        (_, Some(s)) => ScaleFactor::new(s)?,
        (Space::Original, None) => ScaleFactor::IDENTITY,
    };
    let (p1, p2) = match req.space {
        Space::Display => (
            geometry::display_to_original(req.p1, scale),
            geometry::display_to_original(req.p2, scale),
        ),
        Space::Original => (req.p1, req.p2),
    };
    let handle = state.session(&id).await?;
    let mut session = handle.session.lock().await;
    check_cursor(&session, req.expected_cursor)?;
    let line = session.set_pending(p1, p2)?;
    let shown = LineAnnotation {
        start: geometry::original_to_display(line.start, scale),
        end: geometry::original_to_display(line.end, scale),
        position: line.position * scale.get(),
        tilt: line.tilt,
    };
    Ok(Json(PendingResponse {
        original: (&line).into(),
        display: (&shown).into(),
        scale: scale.get(),
        state: StateView::of(&session),
    }))
}

#[derive(Deserialize, Default)]
struct Guard {
    expected_cursor: Option<usize>,
}

#[derive(Serialize)]
struct MutationResponse {
    #[serde(skip_serializing_if = "Option::is_none")]
    changed: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    filled: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    clamped: Option<bool>,
    state: StateView,
}

impl MutationResponse {
    fn new(session: &Session) -> Self {
        Self {
            changed: None,
            filled: None,
            clamped: None,
            state: StateView::of(session),
        }
    }
}

/// Runs `apply` on the session after checking the optional cursor guard.
async fn mutate<F>(
    state: &AppState,
    id: &str,
    body: &Bytes,
    apply: F,
) -> Result<Json<MutationResponse>, ApiError>
where
    F: FnOnce(&mut Session) -> Result<MutationResponse, ApiError>,
{
    let guard: Guard = parse_body(body)?;
    let handle = state.session(id).await?;
    let mut session = handle.session.lock().await;
    check_cursor(&session, guard.expected_cursor)?;
    apply(&mut session).map(Json)
}

async fn abort_pending(
    State(s): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Json<MutationResponse>, ApiError> {
    mutate(&s, &id, &body, |session| {
        session.abort_pending();
        Ok(MutationResponse::new(session))
    })
    .await
}

async fn validate(
    State(s): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Json<MutationResponse>, ApiError> {
    mutate(&s, &id, &body, |session| {
        session.validate_line()?;
        Ok(MutationResponse::new(session))
    })
    .await
}

async fn delete_annotation(
    State(s): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Json<MutationResponse>, ApiError> {
    mutate(&s, &id, &body, |session| {
        let changed = session.delete_annotation();
        Ok(MutationResponse {
            changed: Some(changed),
            ..MutationResponse::new(session)
        })
    })
    .await
}

async fn hide(
    State(s): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Json<MutationResponse>, ApiError> {
    mutate(&s, &id, &body, |session| {
        let changed = session.set_hidden(true);
        Ok(MutationResponse {
            changed: Some(changed),
            ..MutationResponse::new(session)
        })
    })
    .await
}

async fn show(
    State(s): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Json<MutationResponse>, ApiError> {
    mutate(&s, &id, &body, |session| {
        let changed = session.set_hidden(false);
        Ok(MutationResponse {
            changed: Some(changed),
            ..MutationResponse::new(session)
        })
    })
    .await
}

async fn replicate(
    State(s): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Json<MutationResponse>, ApiError> {
    mutate(&s, &id, &body, |session| {
        let filled = session.replicate_backwards()?;
        Ok(MutationResponse {
            filled: Some(filled),
            ..MutationResponse::new(session)
        })
    })
    .await
}

#[derive(Deserialize, Default)]
struct CursorRequest {
    index: Option<usize>,
    direction: Option<String>,
    expected_cursor: Option<usize>,
}

async fn put_cursor(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Json<MutationResponse>, ApiError> {
    let req: CursorRequest = parse_body(&body)?;
    let handle = state.session(&id).await?;
    let mut session = handle.session.lock().await;
    check_cursor(&session, req.expected_cursor)?;
    let clamped = match (req.index, req.direction.as_deref()) {
        (Some(index), None) => {
            session.go_to(index)?;
            false
        }
        (None, Some(dir)) => {
            let dir: Direction = dir
                .parse()
                .map_err(|e: String| ApiError::unprocessable("invalid_direction", e))?;
            session.browse(dir)
        }
        _ => {
            return Err(ApiError::bad_request(
                "give exactly one of 'index' or 'direction'",
            ))
        }
    };
    Ok(Json(MutationResponse {
        clamped: Some(clamped),
        ..MutationResponse::new(&session)
    }))
}

#[derive(Deserialize, Default)]
struct SettingsRequest {
    browse_offset: Option<Value>,
    thickness: Option<Value>,
    expected_cursor: Option<usize>,
}

async fn put_settings(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Json<MutationResponse>, ApiError> {
    let req: SettingsRequest = parse_body(&body)?;
    let offset = req.browse_offset.as_ref().map(raw_setting);
    let thickness = req.thickness.as_ref().map(raw_setting);
    // both values are checked before either is applied
    if let Some(raw) = &offset {
        session::parse_browse_offset(raw)?;
    }
    if let Some(raw) = &thickness {
        session::parse_thickness(raw)?;
    }
    let handle = state.session(&id).await?;
    let mut session = handle.session.lock().await;
    check_cursor(&session, req.expected_cursor)?;
    if let Some(raw) = &offset {
        session.set_browse_offset(raw)?;
    }
    if let Some(raw) = &thickness {
        session.set_thickness(raw)?;
    }
    Ok(Json(MutationResponse::new(&session)))
}

#[derive(Deserialize)]
struct SaveRequest {
    directory: String,
    #[serde(default)]
    force: bool,
}

async fn save_gt(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let req: SaveRequest = serde_json::from_slice(&body)
        .map_err(|e| ApiError::bad_request(format!("invalid JSON body: {e}")))?;
    let dir = resolve_gt_path(&state.config.video_root, &req.directory);
    if !dir.is_dir() {
        return Err(ApiError::new(
            StatusCode::NOT_FOUND,
            "not_found",
            format!("no such directory: '{}'", req.directory),
        ));
    }
    let handle = state.session(&id).await?;
    let mut session = handle.session.lock().await;
    let outcome = session.save(&dir, req.force)?;
    let status = match outcome {
        SaveOutcome::Saved { .. } => StatusCode::OK,
        SaveOutcome::IncompleteWarning { missing_count } => {
            let message = format!("{missing_count} frame(s) are not annotated; save again with force=true to keep them empty");
            let mut body = serde_json::to_value(&outcome).expect("serializable");
            body["code"] = json!("incomplete_annotation");
            body["message"] = json!(message);
            body["state"] = serde_json::to_value(StateView::of(&session)).expect("serializable");
            return Ok((StatusCode::CONFLICT, Json(body)).into_response());
        }
    };
    let mut body = serde_json::to_value(&outcome).expect("serializable");
    body["state"] = serde_json::to_value(StateView::of(&session)).expect("serializable");
    Ok((status, Json(body)).into_response())
}

async fn download_gt(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> Result<Response, ApiError> {
    let handle = state.session(&id).await?;
    let (bytes, name) = {
        let session = handle.session.lock().await;
        (
            gt_format::encode_gt(&session.to_gt_array())?,
            session.gt_file_name(),
        )
    };
    Ok((
        [
            (header::CONTENT_TYPE, "application/octet-stream".to_string()),
            (
                header::CONTENT_DISPOSITION,
                format!("attachment; filename=\"{name}\""),
            ),
        ],
        bytes,
    )
        .into_response())
}

#[derive(Deserialize)]
struct LoadRequest {
    path: String,
}

async fn load_gt(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let req: LoadRequest = serde_json::from_slice(&body)
        .map_err(|e| ApiError::bad_request(format!("invalid JSON body: {e}")))?;
    let path = resolve_gt_path(&state.config.video_root, &req.path);
    let handle = state.session(&id).await?;
    let mut session = handle.session.lock().await;
    let warnings = session.load_gt_file(&path)?;
    let body = json!({
        "warnings": warnings,
        "messages": warnings.iter().map(ToString::to_string).collect::<Vec<_>>(),
        "state": StateView::of(&session),
    });
    Ok(Json(body).into_response())
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route")
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_state))
        .route("/sessions/{id}/frames/{index}", get(get_frame))
        .route(
            "/sessions/{id}/pending",
            post(set_pending).delete(abort_pending),
        )
        .route("/sessions/{id}/validate", post(validate))
        .route("/sessions/{id}/annotation", delete(delete_annotation))
        .route("/sessions/{id}/hide", post(hide))
        .route("/sessions/{id}/show", post(show))
        .route("/sessions/{id}/replicate", post(replicate))
        .route("/sessions/{id}/cursor", put(put_cursor))
        .route("/sessions/{id}/settings", put(put_settings))
        .route("/sessions/{id}/gt:save", post(save_gt))
        .route("/sessions/{id}/gt:load", post(load_gt))
        .route("/sessions/{id}/gt", get(download_gt))
        .fallback(not_found)
        .with_state(state)
}

/// Serves until `shutdown` resolves. Sessions are never saved implicitly.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: AppState,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
}

/// Binds `addr` and spawns the service on the current runtime. Returns the
/// bound address and a sender that stops the server.
pub async fn spawn(
    addr: SocketAddr,
    state: AppState,
) -> std::io::Result<(
    SocketAddr,
    tokio::sync::oneshot::Sender<()>,
    tokio::task::JoinHandle<std::io::Result<()>>,
)> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    let local = listener.local_addr()?;
    let (tx, rx) = tokio::sync::oneshot::channel::<()>();
    let task = tokio::spawn(serve(listener, state, async move {
        let _ = rx.await;
    }));
    Ok((local, tx, task))
}
