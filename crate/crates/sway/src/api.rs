//! HTTP/JSON interface over [`SessionService`]. Bodies are canonical JSON;
//! errors are `{code, message, detail}` objects.

use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Multipart, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use base64::Engine as _;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sway_core::coordination::CoordinationScheme;
use sway_core::encoding::EncodingManifest;
use sway_core::Millis;

use crate::assistant::ClientError;
use crate::canonical::to_canonical_string;
use crate::exporter::ExportError;
use crate::session::{ExportFlavor, ServiceError, SessionService};

/// Error body returned by every endpoint.
#[derive(Debug, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    pub code: String,
    pub message: String,
    pub detail: Value,
}

impl ApiError {
    fn bad_request(code: &str, message: impl Into<String>) -> Self {
        ApiError { status: StatusCode::BAD_REQUEST, code: code.into(), message: message.into(), detail: Value::Null }
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        let status = match &e {
            ServiceError::UnknownSession(_) | ServiceError::UnknownVersion(_) | ServiceError::UnknownTrack { .. } => StatusCode::NOT_FOUND,
            ServiceError::BusySession(_) => StatusCode::CONFLICT,
            ServiceError::Client(ClientError::Timeout) => StatusCode::GATEWAY_TIMEOUT,
            ServiceError::Client(_) => StatusCode::BAD_GATEWAY,
            ServiceError::Store(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        let detail = match &e {
            ServiceError::UnknownSession(id) => json!({ "session_id": id }),
            ServiceError::UnknownVersion(v) => json!({ "version": v }),
            ServiceError::UnknownTrack { ordinal, len } => json!({ "track": ordinal, "tracks": len }),
            ServiceError::InvalidScheme(s) => json!({ "violation": s.to_string() }),
            ServiceError::BudgetTooSmall { budget, required } => json!({ "budget": budget, "required": required }),
            ServiceError::Export(ExportError::UnbakeableFeature(items)) => json!({ "features": items }),
            ServiceError::Export(ExportError::SchemaViolation { path, .. }) => json!({ "path": path }),
            _ => Value::Null,
        };
        ApiError { status, code: e.code().to_owned(), message: e.to_string(), detail }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::bad_request("BadRequest", e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = to_canonical_string(&self).expect("errors serialize");
        (self.status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
    }
}

fn canonical<T: Serialize>(status: StatusCode, value: &T) -> Response {
    let body = to_canonical_string(value).expect("responses serialize");
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

type ApiResult = Result<Response, ApiError>;

/// Runs a blocking service call off the async workers.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ServiceError> + Send + 'static) -> Result<T, ApiError> {
    match tokio::task::spawn_blocking(f).await {
        Ok(r) => r.map_err(ApiError::from),
        Err(e) => Err(ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            code: "Internal".into(),
            message: e.to_string(),
            detail: Value::Null,
        }),
    }
}

type Svc = State<Arc<SessionService>>;

pub fn router(service: Arc<SessionService>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/messages", post(post_message))
        .route("/sessions/{id}/versions", get(list_versions))
        .route("/sessions/{id}/versions/{v}", get(get_version))
        .route("/sessions/{id}/versions/{v}/tracks/{k}/coordination", put(put_coordination))
        .route("/sessions/{id}/versions/{v}/tracks/{k}/timing", put(put_timing))
        .route("/sessions/{id}/versions/{v}/preview", get(preview))
        .route("/sessions/{id}/versions/{v}/export", post(export))
        .with_state(service)
}

async fn create_session(State(svc): Svc, mut form: Multipart) -> ApiResult {
    let mut svg = None;
    let mut styles = None;
    let mut manifest = None;
    loop {
        let field = match form.next_field().await {
            Ok(Some(f)) => f,
            Ok(None) => break,
            Err(e) => return Err(ApiError::bad_request("BadRequest", e.body_text())),
        };
        let name = field.name().unwrap_or_default().to_owned();
        let bytes = field.bytes().await.map_err(|e| ApiError::bad_request("BadRequest", e.body_text()))?;
        match name.as_str() {
            "svg" => svg = Some(bytes.to_vec()),
            "styles" => {
                styles = Some(String::from_utf8(bytes.to_vec()).map_err(|_| ApiError::bad_request("BadRequest", "styles must be UTF-8"))?)
            }
            "manifest" => {
                let m: EncodingManifest =
                    serde_json::from_slice(&bytes).map_err(|e| ApiError::bad_request("InvalidManifest", e.to_string()))?;
                if !m.is_valid() {
                    return Err(ApiError::bad_request("InvalidManifest", "manifest entries need a non-empty selector"));
                }
                manifest = Some(m);
            }
            _ => {}
        }
    }
    let svg = svg.ok_or_else(|| ApiError::bad_request("BadRequest", "missing multipart field \"svg\""))?;
    let session = blocking(move || svc.create_session(&svg, styles, manifest)).await?;
    Ok(canonical(StatusCode::CREATED, &json!({ "session_id": session.id })))
}

async fn get_session(State(svc): Svc, Path(id): Path<String>) -> ApiResult {
    let s = blocking(move || svc.session(&id)).await?;
    let versions: Vec<u64> = s.versions.iter().map(|v| v.id).collect();
    Ok(canonical(
        StatusCode::OK,
        &json!({
            "session_id": s.id,
            "view_box": s.document.view_box(),
            "manifest": s.manifest,
            "history": s.history,
            "versions": versions,
            "active_version": s.active_version,
        }),
    ))
}

#[derive(Deserialize)]
struct MessageBody {
    text: String,
    #[serde(default)]
    base_versions: Vec<u64>,
    /// PNG bytes, base64-encoded.
    #[serde(default)]
    screenshot: Option<String>,
}

async fn post_message(State(svc): Svc, Path(id): Path<String>, body: Result<Json<MessageBody>, JsonRejection>) -> ApiResult {
    let Json(body) = body?;
    let screenshot = match body.screenshot {
        Some(b64) => Some(
            base64::engine::general_purpose::STANDARD
                .decode(b64.trim())
                .map_err(|e| ApiError::bad_request("BadRequest", format!("screenshot is not base64: {e}")))?,
        ),
        None => None,
    };
    let outcome = blocking(move || svc.post_message(&id, &body.text, &body.base_versions, screenshot)).await?;
    Ok(canonical(StatusCode::OK, &outcome))
}

async fn list_versions(State(svc): Svc, Path(id): Path<String>) -> ApiResult {
    let versions = blocking(move || svc.versions(&id)).await?;
    Ok(canonical(StatusCode::OK, &versions))
}

async fn get_version(State(svc): Svc, Path((id, v)): Path<(String, u64)>) -> ApiResult {
    let version = blocking(move || svc.version(&id, v)).await?;
    Ok(canonical(StatusCode::OK, &version))
}

#[derive(Deserialize)]
struct CoordinationBody {
    scheme: CoordinationScheme,
    #[serde(default)]
    offset: Option<Millis>,
}

async fn put_coordination(
    State(svc): Svc,
    Path((id, v, k)): Path<(String, u64, usize)>,
    body: Result<Json<CoordinationBody>, JsonRejection>,
) -> ApiResult {
    let Json(body) = body?;
    let version = blocking(move || svc.set_coordination(&id, v, k, body.scheme, body.offset)).await?;
    Ok(canonical(StatusCode::OK, &version))
}

#[derive(Deserialize)]
struct TimingBody {
    delay: Millis,
    duration: Millis,
}

async fn put_timing(
    State(svc): Svc,
    Path((id, v, k)): Path<(String, u64, usize)>,
    body: Result<Json<TimingBody>, JsonRejection>,
) -> ApiResult {
    let Json(body) = body?;
    let version = blocking(move || svc.set_timeline(&id, v, k, body.delay, body.duration)).await?;
    Ok(canonical(StatusCode::OK, &version))
}

#[derive(Deserialize)]
struct PreviewQuery {
    t: Millis,
}

async fn preview(State(svc): Svc, Path((id, v)): Path<(String, u64)>, Query(q): Query<PreviewQuery>) -> ApiResult {
    let snapshot = blocking(move || svc.preview(&id, v, q.t)).await?;
    Ok(canonical(StatusCode::OK, &snapshot))
}

#[derive(Deserialize)]
struct ExportBody {
    flavor: ExportFlavor,
}

async fn export(State(svc): Svc, Path((id, v)): Path<(String, u64)>, body: Result<Json<ExportBody>, JsonRejection>) -> ApiResult {
    let Json(body) = body?;
    let flavor = body.flavor;
    let artifact = blocking(move || svc.export(&id, v, flavor)).await?;
    Ok((StatusCode::OK, [(header::CONTENT_TYPE, flavor.content_type())], artifact).into_response())
}
