use std::sync::Arc;

use axum::body::Body;
use axum::http::{header, Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use sway::api::router;
use sway::assistant::StubClient;
use sway::session::{SessionService, SessionStore};
use tower::ServiceExt;

const SVG: &str = include_str!("../fixtures/walkthrough.svg");
const MANIFEST: &str = include_str!("../fixtures/walkthrough.manifest.json");
const BOUNDARY: &str = "sway-test-boundary";

fn app(dir: &std::path::Path) -> Router {
    let service = SessionService::new(SessionStore::new(dir), Arc::new(StubClient::builtin())).with_clock(|| 1_700_000_000_000);
    router(Arc::new(service))
}

fn multipart(parts: &[(&str, &str)]) -> Request<Body> {
    let mut body = String::new();
    for (name, content) in parts {
        body.push_str(&format!(
            "--{BOUNDARY}\r\nContent-Disposition: form-data; name=\"{name}\"; filename=\"{name}\"\r\n\r\n{content}\r\n"
        ));
    }
    body.push_str(&format!("--{BOUNDARY}--\r\n"));
    Request::builder()
        .method(Method::POST)
        .uri("/sessions")
        .header(header::CONTENT_TYPE, format!("multipart/form-data; boundary={BOUNDARY}"))
        .body(Body::from(body))
        .unwrap()
}

fn json_request(method: Method, uri: &str, body: Value) -> Request<Body> {
    Request::builder().method(method).uri(uri).header(header::CONTENT_TYPE, "application/json").body(Body::from(body.to_string())).unwrap()
}

fn get(uri: &str) -> Request<Body> {
    Request::builder().uri(uri).body(Body::empty()).unwrap()
}

async fn send(app: &Router, req: Request<Body>) -> (StatusCode, String) {
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

async fn send_json(app: &Router, req: Request<Body>) -> (StatusCode, Value) {
    let (status, text) = send(app, req).await;
    (status, serde_json::from_str(&text).unwrap_or_else(|e| panic!("{e}: {text}")))
}

async fn new_session(app: &Router) -> String {
    let (status, body) = send_json(app, multipart(&[("svg", SVG), ("manifest", MANIFEST)])).await;
    assert_eq!(status, StatusCode::CREATED, "{body}");
    body["session_id"].as_str().unwrap().to_owned()
}

#[tokio::test]
async fn full_authoring_flow() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let id = new_session(&app).await;

    let (status, body) = send_json(
        &app,
        json_request(Method::POST, &format!("/sessions/{id}/messages"), json!({"text": "Please make the flowers grow up"})),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["version"]["id"], 1);
    let titles: Vec<&str> = body["version"]["clips"].as_array().unwrap().iter().map(|c| c["clip"]["title"].as_str().unwrap()).collect();
    assert_eq!(titles, ["Grow up", "Unfold petals"]);
    assert_eq!(body["entry"]["produced_version"], 1);

    let (status, body) = send_json(
        &app,
        json_request(
            Method::PUT,
            &format!("/sessions/{id}/versions/1/tracks/0/coordination"),
            json!({"scheme": {"mode": "layout-radius", "center": [0.5, 0.5]}}),
        ),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["clips"][0]["coordination"], json!({"mode": "layout-radius", "center": [0.5, 0.5]}));

    let (status, body) = send_json(
        &app,
        json_request(Method::PUT, &format!("/sessions/{id}/versions/1/tracks/1/timing"), json!({"delay": 200, "duration": 600})),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    assert_eq!(body["clips"][1]["duration"], 600.0);

    let (status, snapshot) = send_json(&app, get(&format!("/sessions/{id}/versions/1/preview?t=0"))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(snapshot["time"], 0.0);
    assert!(!snapshot["values"].as_object().unwrap().is_empty());

    let (status, versions) = send_json(&app, get(&format!("/sessions/{id}/versions"))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(versions.as_array().unwrap().len(), 1);
    let (_, v1) = send_json(&app, get(&format!("/sessions/{id}/versions/1"))).await;
    assert_eq!(v1, versions[0]);

    let (status, program) =
        send(&app, json_request(Method::POST, &format!("/sessions/{id}/versions/1/export"), json!({"flavor": "program"}))).await;
    assert_eq!(status, StatusCode::OK);
    let (status, script) =
        send(&app, json_request(Method::POST, &format!("/sessions/{id}/versions/1/export"), json!({"flavor": "script"}))).await;
    assert_eq!(status, StatusCode::OK);
    assert!(script.contains(&program), "script must embed the canonical program");
    let (status, baked) =
        send(&app, json_request(Method::POST, &format!("/sessions/{id}/versions/1/export"), json!({"flavor": "baked"}))).await;
    assert_eq!(status, StatusCode::OK);
    assert!(baked.contains("@keyframes"));

    let (status, session) = send_json(&app, get(&format!("/sessions/{id}"))).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(session["history"].as_array().unwrap().len(), 2);
    assert_eq!(session["active_version"], 1);
}

#[tokio::test]
async fn responses_are_canonical_json() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let id = new_session(&app).await;
    send(&app, json_request(Method::POST, &format!("/sessions/{id}/messages"), json!({"text": "Please make the flowers grow up"}))).await;
    let (_, text) = send(&app, get(&format!("/sessions/{id}/versions/1"))).await;
    let value: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(sway::canonical::to_canonical_string(&value).unwrap(), text);
}

#[tokio::test]
async fn errors_carry_code_message_detail() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());

    let (status, body) = send_json(&app, get("/sessions/deadbeef/versions")).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["code"], "UnknownSession");
    assert!(body["message"].is_string());
    assert_eq!(body["detail"]["session_id"], "deadbeef");

    let (status, body) = send_json(&app, multipart(&[("svg", "<svg viewBox='0 0 1 1'>")])).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["code"], "MalformedSvg");
    assert!(SessionStore::new(dir.path()).list().unwrap().is_empty());

    let id = new_session(&app).await;
    let (status, body) = send_json(
        &app,
        json_request(Method::POST, &format!("/sessions/{id}/messages"), json!({"text": "Make it move", "base_versions": [99]})),
    )
    .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["code"], "UnknownVersion");

    send(&app, json_request(Method::POST, &format!("/sessions/{id}/messages"), json!({"text": "Please make the flowers grow up"}))).await;
    let (status, body) = send_json(
        &app,
        json_request(
            Method::PUT,
            &format!("/sessions/{id}/versions/1/tracks/0/coordination"),
            json!({"scheme": {"mode": "layout-sketch", "polyline": [[0.1, 0.1]]}}),
        ),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["code"], "InvalidScheme");
    assert!(body["detail"]["violation"].as_str().unwrap().contains("two points"));

    let (status, body) = send_json(
        &app,
        json_request(Method::PUT, &format!("/sessions/{id}/versions/1/tracks/7/timing"), json!({"delay": 0, "duration": 10})),
    )
    .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["code"], "UnknownTrack");

    let (status, body) = send_json(
        &app,
        json_request(Method::PUT, &format!("/sessions/{id}/versions/1/tracks/0/timing"), json!({"delay": -5, "duration": 10})),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["code"], "InvalidDelay");

    let (status, body) =
        send_json(&app, json_request(Method::PUT, &format!("/sessions/{id}/versions/1/tracks/0/timing"), json!({"delay": "soon"}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["code"], "BadRequest");
}

#[tokio::test]
async fn encoding_warning_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let id = new_session(&app).await;
    let (status, body) = send_json(
        &app,
        json_request(Method::POST, &format!("/sessions/{id}/messages"), json!({"text": "Make the petals glow brighter in a loop"})),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    let warnings = body["version"]["warnings"].as_array().unwrap();
    assert_eq!(warnings.len(), 1);
    assert!(warnings[0]["rationale"].as_str().unwrap().starts_with("Color has already encoded metrics"));
}

#[tokio::test]
async fn chat_only_reply_has_no_version() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let id = new_session(&app).await;
    let (status, body) =
        send_json(&app, json_request(Method::POST, &format!("/sessions/{id}/messages"), json!({"text": "How can I animate it?"}))).await;
    assert_eq!(status, StatusCode::OK);
    assert!(body.get("version").is_none_or(Value::is_null), "{body}");
    assert!(body["entry"]["produced_version"].is_null());
}
