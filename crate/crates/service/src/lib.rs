//! HTTP/JSON review service: detection, the queue of uncertain results,
//! expert feedback that updates the model, and model snapshots.
//!
//! | method | path | |
//! |---|---|---|
//! | POST | `/detect[?explain=1]` | score a series, enqueue it when uncertain |
//! | GET | `/queue?status=&limit=&offset=` | review items in arrival order |
//! | POST | `/feedback` | apply a verdict to a pending item |
//! | GET/POST | `/model` | fetch or replace the model document |
//! | GET | `/model/heatmap` | normalized path counts per pattern |
//! | GET | `/series/{id}` | a detected series and its outcome |
//!
//! The current model version travels in the `x-model-version` header of
//! `GET /model` so the body stays a plain model document.

mod error;
pub mod feedback;
mod state;
pub mod store;

use std::net::SocketAddr;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::header::CONTENT_TYPE;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use warpwatch::model::{deserialize_model_set, serialize_model_set};
use warpwatch::{validate_model_visual, TimeSeries};

pub use error::ApiError;
pub use feedback::{replay, FeedbackEvent, Verdict};
pub use state::{
    AppState, Detection, ItemStatus, ReviewItem, SeriesRecord, ServiceConfig, Snapshot,
};

pub const MODEL_VERSION_HEADER: &str = "x-model-version";
const DEFAULT_PAGE: usize = 50;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/detect", post(detect))
        .route("/queue", get(queue))
        .route("/feedback", post(feedback))
        .route("/model", get(get_model).post(post_model))
        .route("/model/heatmap", get(heatmap))
        .route("/series/:id", get(series))
        .with_state(state)
}

/// Binds `0.0.0.0:port` and serves until Ctrl-C.
pub async fn serve(state: AppState, port: u16) -> std::io::Result<()> {
    let addr = SocketAddr::from(([0, 0, 0, 0], port));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

/// JSON bodies are parsed by hand so every malformed request maps to 400.
fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body)
        .map_err(|e| ApiError::BadRequest(format!("malformed request: {e}")))
}

#[derive(Deserialize)]
struct SeriesInput {
    #[serde(default)]
    id: String,
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct DetectRequest {
    series: SeriesInput,
}

#[derive(Deserialize)]
struct DetectParams {
    #[serde(default)]
    explain: Option<String>,
}

#[derive(Serialize)]
struct DetectResponse {
    series_id: String,
    score: f64,
    classification: warpwatch::Classification,
    model_version: u64,
    pattern_id: String,
    pattern_index: usize,
    infeasible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    item_id: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    per_step_flags: Option<Vec<u8>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    path: Option<warpwatch::WarpingPath>,
}

async fn detect(
    State(state): State<AppState>,
    Query(params): Query<DetectParams>,
    body: Bytes,
) -> Result<Json<DetectResponse>, ApiError> {
    let req: DetectRequest = parse_body(&body)?;
    let series = TimeSeries::new(req.series.id, req.series.values);
    series.validate()?;
    let explain = matches!(params.explain.as_deref(), Some("1" | "true"));
    let Detection {
        series_id,
        outcome,
        model_version,
        item_id,
    } = state.detect(series)?;
    Ok(Json(DetectResponse {
        series_id,
        score: outcome.score,
        classification: outcome.classification,
        model_version,
        pattern_id: outcome.pattern_id,
        pattern_index: outcome.pattern_index,
        infeasible: outcome.infeasible,
        item_id,
        per_step_flags: explain.then_some(outcome.per_step_flags),
        path: if explain { outcome.path } else { None },
    }))
}

#[derive(Deserialize)]
struct QueueParams {
    status: Option<String>,
    limit: Option<usize>,
    offset: Option<usize>,
}

#[derive(Serialize)]
struct QueueEntry {
    item_id: u64,
    series_id: String,
    score: f64,
    pattern_id: String,
    pattern_index: usize,
    model_version: u64,
    queued_at: u64,
    status: ItemStatus,
}

async fn queue(
    State(state): State<AppState>,
    Query(params): Query<QueueParams>,
) -> Result<Json<Value>, ApiError> {
    let status = match params.status.as_deref() {
        None => Some(ItemStatus::Pending),
        Some("all") => None,
        Some(s) => Some(
            ItemStatus::parse(s)
                .ok_or_else(|| ApiError::BadRequest(format!("unknown status {s:?}")))?,
        ),
    };
    let (total, items) = state.queue(
        status,
        params.offset.unwrap_or(0),
        params.limit.unwrap_or(DEFAULT_PAGE),
    );
    let items: Vec<QueueEntry> = items
        .into_iter()
        .map(|i| QueueEntry {
            item_id: i.item_id,
            series_id: i.series.id,
            score: i.outcome.score,
            pattern_id: i.outcome.pattern_id,
            pattern_index: i.outcome.pattern_index,
            model_version: i.model_version,
            queued_at: i.queued_at,
            status: i.status,
        })
        .collect();
    Ok(Json(json!({ "total": total, "items": items })))
}

#[derive(Deserialize)]
struct FeedbackRequest {
    item_id: u64,
    label: String,
}

async fn feedback(State(state): State<AppState>, body: Bytes) -> Result<Json<Value>, ApiError> {
    let req: FeedbackRequest = parse_body(&body)?;
    let label: Verdict = req.label.parse().map_err(ApiError::BadRequest)?;
    let version = state.feedback(req.item_id, label)?;
    Ok(Json(json!({ "model_version": version })))
}

async fn get_model(State(state): State<AppState>) -> Result<Response, ApiError> {
    let snapshot = state
        .snapshot()
        .ok_or_else(|| ApiError::NotFound("no model loaded".into()))?;
    Ok((
        [
            (CONTENT_TYPE.as_str(), "application/json".to_string()),
            (MODEL_VERSION_HEADER, snapshot.version.to_string()),
        ],
        serialize_model_set(&snapshot.models),
    )
        .into_response())
}

async fn post_model(State(state): State<AppState>, body: Bytes) -> Result<Json<Value>, ApiError> {
    let text = std::str::from_utf8(&body).map_err(|e| ApiError::BadRequest(e.to_string()))?;
    let models = deserialize_model_set(text)?;
    let version = state.load_model(models)?;
    Ok(Json(json!({ "model_version": version })))
}

async fn heatmap(State(state): State<AppState>) -> Result<Json<Value>, ApiError> {
    let snapshot = state
        .snapshot()
        .ok_or_else(|| ApiError::NotFound("no model loaded".into()))?;
    let patterns: Vec<_> = snapshot
        .models
        .models()
        .iter()
        .map(validate_model_visual)
        .collect();
    Ok(Json(
        json!({ "model_version": snapshot.version, "patterns": patterns }),
    ))
}

async fn series(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<SeriesRecord>, ApiError> {
    state
        .series(&id)
        .map(Json)
        .ok_or_else(|| ApiError::NotFound(format!("unknown series {id}")))
}
