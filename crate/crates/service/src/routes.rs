use std::convert::Infallible;
use std::sync::Arc;
use std::time::Duration;

use axum::body::{Body, Bytes};
use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::sync::{broadcast, Mutex};

use teachable_core::ids::{AssetId, StateId};
use teachable_core::pipeline::EventPayload;
use teachable_core::project::{AssetEntry, Project};
use teachable_core::scene::{SceneObject, Snapshot};
use teachable_core::teach::HeadSpec;
use teachable_core::vision::{decode_frame, Frame, FrameFormat};

use crate::error::ApiError;
use crate::events::{EventFeed, FeedItem};
use crate::session::{Mode, NewState, Session};

#[derive(Clone)]
pub struct AppState {
    session: Arc<Mutex<Session>>,
    feed: EventFeed,
}

impl AppState {
    pub fn new() -> Self {
        let feed = EventFeed::new(4096);
        Self { session: Arc::new(Mutex::new(Session::new("session-1", feed.clone()))), feed }
    }
}

impl Default for AppState {
    fn default() -> Self {
        Self::new()
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: AppState) -> Router {
    let v1 = Router::new()
        .route("/project", post(create_project).get(get_project).put(put_project))
        .route("/states", post(add_state))
        .route("/states/{id}/samples", post(add_sample))
        .route("/assets/{id}", post(put_asset))
        .route("/objects", post(put_object))
        .route("/capture/start", post(capture_start))
        .route("/capture/stop", post(capture_stop))
        .route("/train", post(train))
        .route("/train/status", get(train_status))
        .route("/classify", post(classify))
        .route("/scenes/{state_id}", post(save_scene))
        .route("/mode", get(get_mode).post(set_mode))
        .route("/frames", post(push_frame))
        .route("/events", get(events));
    Router::new().nest("/v1", v1).with_state(state)
}

fn header_u64(headers: &HeaderMap, name: &str) -> ApiResult<Option<u64>> {
    headers
        .get(name)
        .map(|v| {
            v.to_str()
                .ok()
                .and_then(|s| s.trim().parse::<u64>().ok())
                .ok_or_else(|| ApiError::bad_request("BadHeader", format!("{name} must be an unsigned integer")))
        })
        .transpose()
}

/// Decodes a frame body: PNG, or raw RGB with `X-Frame-Width/Height`.
fn read_frame(headers: &HeaderMap, body: &Bytes, default_ts: u64) -> ApiResult<Frame> {
    let content_type = headers.get(header::CONTENT_TYPE).and_then(|v| v.to_str().ok()).unwrap_or("");
    let format = if content_type.starts_with("image/png") {
        FrameFormat::Png
    } else if content_type.starts_with("application/octet-stream") {
        let w = header_u64(headers, "x-frame-width")?;
        let h = header_u64(headers, "x-frame-height")?;
        match (w, h) {
            (Some(width), Some(height)) => FrameFormat::RawRgb { width: width as u32, height: height as u32 },
            _ => return Err(ApiError::bad_request("BadHeader", "raw frames need X-Frame-Width and X-Frame-Height")),
        }
    } else {
        return Err(ApiError::new(
            StatusCode::UNSUPPORTED_MEDIA_TYPE,
            "UnsupportedMediaType",
            "frames must be image/png or application/octet-stream",
        ));
    };
    let ts = header_u64(headers, "x-frame-timestamp")?.unwrap_or(default_ts);
    Ok(decode_frame(body, format)?.with_timestamp(ts))
}

fn parse_json<T: for<'de> Deserialize<'de>>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request("SchemaViolation", e.to_string()))
}

fn project_json(p: &Project) -> Response {
    Json(serde_json::to_value(p).expect("project serializes")).into_response()
}

#[derive(Deserialize)]
struct CreateProject {
    #[serde(default)]
    name: Option<String>,
}

async fn create_project(State(app): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let req: CreateProject = if body.is_empty() { CreateProject { name: None } } else { parse_json(&body)? };
    let mut s = app.session.lock().await;
    let p = s.create_project(req.name.as_deref().unwrap_or("untitled"))?;
    Ok((StatusCode::CREATED, project_json(p)).into_response())
}

async fn get_project(State(app): State<AppState>) -> Response {
    let mut s = app.session.lock().await;
    project_json(s.project())
}

async fn put_project(State(app): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let project: Project = parse_json(&body)?;
    let mut s = app.session.lock().await;
    Ok(project_json(s.replace_project(project)?))
}

async fn add_state(State(app): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let req: NewState = parse_json(&body)?;
    let id = req.state_id.clone();
    let ordinal = app.session.lock().await.add_state(req)?;
    Ok((StatusCode::CREATED, Json(json!({ "stateId": id, "ordinal": ordinal })).into_response()).into_response())
}

async fn add_sample(
    State(app): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<Response> {
    let frame = read_frame(&headers, &body, 0)?;
    let state = StateId::new(id);
    let (path, count) = app.session.lock().await.add_sample(&state, frame)?;
    Ok((StatusCode::CREATED, Json(json!({ "stateId": state, "path": path, "sampleCount": count }))).into_response())
}

async fn put_asset(State(app): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<Value>> {
    let entry: AssetEntry = parse_json(&body)?;
    app.session.lock().await.add_asset(AssetId::new(id.clone()), entry);
    Ok(Json(json!({ "assetId": id })))
}

async fn put_object(State(app): State<AppState>, body: Bytes) -> ApiResult<Json<Value>> {
    let object: SceneObject = parse_json(&body)?;
    let id = object.object_id.clone();
    app.session.lock().await.put_object(object)?;
    Ok(Json(json!({ "objectId": id })))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct CaptureStart {
    state_id: StateId,
}

async fn capture_start(State(app): State<AppState>, body: Bytes) -> ApiResult<Json<Value>> {
    let req: CaptureStart = parse_json(&body)?;
    let mut s = app.session.lock().await;
    s.set_mode(Mode::Capture { state_id: req.state_id })?;
    Ok(Json(serde_json::to_value(s.mode()).expect("mode serializes")))
}

async fn capture_stop(State(app): State<AppState>) -> ApiResult<Json<Value>> {
    let mut s = app.session.lock().await;
    if matches!(s.mode(), Mode::Capture { .. }) {
        s.set_mode(Mode::Author)?;
    }
    Ok(Json(serde_json::to_value(s.mode()).expect("mode serializes")))
}

async fn train(State(app): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let spec: Option<HeadSpec> = if body.is_empty() { None } else { Some(parse_json(&body)?) };
    let feed = app.feed.clone();
    let done_feed = app.feed.clone();
    let progress = app.session.lock().await.start_training(spec, move |ok| {
        let status = if ok { "done" } else { "failed" };
        done_feed.publish_now(EventPayload::TrainStatus { progress: if ok { 1.0 } else { 0.0 }, status: Some(status.into()) });
    })?;
    // progress ticker; stops once the worker reports completion
    let session = app.session.clone();
    tokio::spawn(async move {
        let mut last = -1.0;
        loop {
            tokio::time::sleep(Duration::from_millis(100)).await;
            let running = session.lock().await.train_status().running;
            let p = progress.get();
            if !running {
                break;
            }
            if p != last {
                feed.publish_now(EventPayload::TrainStatus { progress: p, status: None });
                last = p;
            }
        }
    });
    Ok((StatusCode::ACCEPTED, Json(json!({ "started": true })).into_response()).into_response())
}

async fn train_status(State(app): State<AppState>) -> Json<Value> {
    let status = app.session.lock().await.train_status();
    Json(serde_json::to_value(status).expect("status serializes"))
}

async fn classify(State(app): State<AppState>, headers: HeaderMap, body: Bytes) -> ApiResult<Json<Value>> {
    let frame = read_frame(&headers, &body, 0)?;
    let s = app.session.lock().await;
    let pred = s.classify(&frame)?;
    Ok(Json(serde_json::to_value(pred).expect("prediction serializes")))
}

#[derive(Deserialize)]
struct SceneBody {
    snapshots: Snapshot,
}

async fn save_scene(State(app): State<AppState>, Path(state): Path<String>, body: Bytes) -> ApiResult<Response> {
    let req: SceneBody = parse_json(&body)?;
    let state = StateId::new(state);
    app.session.lock().await.save_scene(&state, req.snapshots)?;
    Ok((StatusCode::CREATED, Json(json!({ "stateId": state }))).into_response())
}

async fn get_mode(State(app): State<AppState>) -> Json<Value> {
    Json(serde_json::to_value(app.session.lock().await.mode()).expect("mode serializes"))
}

async fn set_mode(State(app): State<AppState>, body: Bytes) -> ApiResult<Json<Value>> {
    let mode: Mode = parse_json(&body)?;
    let mut s = app.session.lock().await;
    s.set_mode(mode)?;
    Ok(Json(serde_json::to_value(s.mode()).expect("mode serializes")))
}

async fn push_frame(State(app): State<AppState>, headers: HeaderMap, body: Bytes) -> ApiResult<Json<Value>> {
    let mut s = app.session.lock().await;
    let frame = read_frame(&headers, &body, 0)?;
    let outcome = s.push_frame(frame)?;
    Ok(Json(serde_json::to_value(outcome).expect("outcome serializes")))
}

/// Newline-delimited JSON until the session leaves capture or test mode.
async fn events(State(app): State<AppState>) -> ApiResult<Response> {
    let rx = {
        let s = app.session.lock().await;
        if *s.mode() == Mode::Author {
            return Err(ApiError::conflict("WrongMode", "events stream in capture or test mode"));
        }
        app.feed.subscribe()
    };
    let stream = futures::stream::unfold(rx, |mut rx| async move {
        loop {
            match rx.recv().await {
                Ok(FeedItem::Event(e)) => {
                    let mut line = e.to_json_line();
                    line.push('\n');
                    return Some((Ok::<_, Infallible>(Bytes::from(line)), rx));
                }
                Ok(FeedItem::Close) | Err(broadcast::error::RecvError::Closed) => return None,
                Err(broadcast::error::RecvError::Lagged(n)) => log::warn!("event stream lagged by {n} events"),
            }
        }
    });
    Ok(Response::builder()
        .header(header::CONTENT_TYPE, "application/x-ndjson")
        .body(Body::from_stream(stream))
        .expect("valid response"))
}
