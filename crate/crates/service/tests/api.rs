use std::collections::BTreeMap;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;
use warpwatch::model::{deserialize_model_set, serialize_model_set};
use warpwatch::{
    train, Band, ModelSet, NormalModel, Pos, TimeSeries, TrainConfig, TrainingSet, WarpingPath,
};
use warpwatch_service::{replay, router, AppState, ServiceConfig, MODEL_VERSION_HEADER};

fn five_path_model() -> ModelSet {
    let paths = vec![
        WarpingPath::from_pairs(&[(0, 0), (1, 1), (2, 2), (3, 3)]),
        WarpingPath::from_pairs(&[(0, 0), (0, 1), (1, 2), (2, 3), (3, 3)]),
        WarpingPath::from_pairs(&[(0, 0), (1, 1), (2, 1), (3, 2), (3, 3)]),
        WarpingPath::from_pairs(&[(0, 0), (1, 1), (2, 1), (3, 2), (3, 3)]),
        WarpingPath::from_pairs(&[(0, 0), (0, 1), (1, 2), (2, 3), (3, 3)]),
    ];
    let rep = TimeSeries::new("five", vec![0.0, 1.0, 2.0, 1.0]);
    ModelSet::single(
        NormalModel::from_paths(rep, 4, paths, 2, Default::default(), Default::default()).unwrap(),
    )
}

fn sine(id: &str, n: usize, phase: f64) -> TimeSeries {
    let values = (0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            (std::f64::consts::TAU * (t + phase * t * (1.0 - t))).sin()
        })
        .collect();
    TimeSeries::new(id, values)
}

fn sine_model() -> ModelSet {
    let training: Vec<TimeSeries> = (0..6)
        .map(|k| sine(&format!("t{k}"), 24, 0.1 * k as f64 - 0.25))
        .collect();
    let ts = TrainingSet::new(training).unwrap();
    let config = TrainConfig {
        window: 3,
        ..Default::default()
    };
    ModelSet::new(train(&ts, &BTreeMap::new(), &config).unwrap()).unwrap()
}

fn config(band: (f64, f64)) -> ServiceConfig {
    ServiceConfig {
        band: Band::new(band.0, band.1).unwrap(),
        ..Default::default()
    }
}

fn loaded(models: ModelSet, cfg: ServiceConfig) -> (AppState, Router) {
    let state = AppState::new(cfg).unwrap();
    state.load_model(models).unwrap();
    (state.clone(), router(state))
}

async fn call(
    app: &Router,
    method: &str,
    uri: &str,
    body: Option<String>,
) -> (StatusCode, String, Option<String>) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map(Body::from).unwrap_or_else(Body::empty))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let version = resp
        .headers()
        .get(MODEL_VERSION_HEADER)
        .map(|v| v.to_str().unwrap().to_string());
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap(), version)
}

async fn call_json(
    app: &Router,
    method: &str,
    uri: &str,
    body: Option<Value>,
) -> (StatusCode, Value) {
    let (status, text, _) = call(app, method, uri, body.map(|b| b.to_string())).await;
    (status, serde_json::from_str(&text).unwrap_or(Value::Null))
}

async fn detect(app: &Router, series: &TimeSeries) -> Value {
    let body = json!({ "series": { "id": series.id, "values": series.values } });
    let (status, v) = call_json(app, "POST", "/detect", Some(body)).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    v
}

#[tokio::test]
async fn fresh_service_has_no_model_and_empty_queue() {
    let app = router(AppState::new(ServiceConfig::default()).unwrap());
    let body = json!({ "series": { "values": [1.0, 2.0] } });
    assert_eq!(
        call_json(&app, "POST", "/detect", Some(body)).await.0,
        StatusCode::CONFLICT
    );
    assert_eq!(
        call_json(&app, "GET", "/model", None).await.0,
        StatusCode::NOT_FOUND
    );
    let (status, q) = call_json(&app, "GET", "/queue?status=pending", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(q["total"], 0);
    assert_eq!(q["items"], json!([]));
}

#[tokio::test]
async fn representative_scores_one_and_is_not_queued() {
    let models = sine_model();
    let rep = models.models()[0].representative().clone();
    let (_, app) = loaded(models, ServiceConfig::default());
    let v = detect(&app, &rep).await;
    assert_eq!(v["score"], 1.0);
    assert_eq!(v["classification"], "normal");
    assert!(v.get("item_id").is_none());
    assert!(v.get("per_step_flags").is_none());
}

#[tokio::test]
async fn malformed_requests_are_rejected() {
    let (_, app) = loaded(sine_model(), ServiceConfig::default());
    let empty = json!({ "series": { "id": "x", "values": [] } });
    assert_eq!(
        call_json(&app, "POST", "/detect", Some(empty)).await.0,
        StatusCode::BAD_REQUEST
    );
    let (status, _, _) = call(&app, "POST", "/detect", Some("{not json".into())).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let missing = json!({ "values": [1.0] });
    assert_eq!(
        call_json(&app, "POST", "/detect", Some(missing)).await.0,
        StatusCode::BAD_REQUEST
    );
    let bad_label = json!({ "item_id": 1, "label": "maybe" });
    assert_eq!(
        call_json(&app, "POST", "/feedback", Some(bad_label))
            .await
            .0,
        StatusCode::BAD_REQUEST
    );
    assert_eq!(
        call_json(&app, "GET", "/queue?status=bogus", None).await.0,
        StatusCode::BAD_REQUEST
    );
}

#[tokio::test]
async fn explain_returns_flags_and_path() {
    let (_, app) = loaded(sine_model(), ServiceConfig::default());
    let q = sine("q", 24, 0.05);
    let body = json!({ "series": { "id": "q", "values": q.values } });
    let (_, v) = call_json(&app, "POST", "/detect?explain=1", Some(body)).await;
    let flags = v["per_step_flags"].as_array().unwrap();
    let path = v["path"].as_array().unwrap();
    assert_eq!(flags.len() + 1, path.len());
}

#[tokio::test]
async fn uncertain_detection_round_trip() {
    let (_, app) = loaded(sine_model(), config((0.0, 1.0)));
    let q = sine("q1", 24, 0.05);
    let v = detect(&app, &q).await;
    assert_eq!(v["classification"], "uncertain");
    let item = v["item_id"].as_u64().unwrap();

    let (_, queue) = call_json(&app, "GET", "/queue?status=pending", None).await;
    assert_eq!(queue["total"], 1);
    assert_eq!(queue["items"][0]["item_id"], item);
    assert_eq!(queue["items"][0]["series_id"], "q1");

    let fb = json!({ "item_id": item, "label": "normal" });
    let (status, r) = call_json(&app, "POST", "/feedback", Some(fb.clone())).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(r["model_version"], 2);

    let (_, queue) = call_json(&app, "GET", "/queue", None).await;
    assert_eq!(queue["total"], 0);
    let (_, labeled) = call_json(&app, "GET", "/queue?status=labeled_normal", None).await;
    assert_eq!(labeled["total"], 1);

    assert_eq!(
        call_json(&app, "POST", "/feedback", Some(fb)).await.0,
        StatusCode::CONFLICT
    );
    let unknown = json!({ "item_id": 999, "label": "normal" });
    assert_eq!(
        call_json(&app, "POST", "/feedback", Some(unknown)).await.0,
        StatusCode::NOT_FOUND
    );
}

#[tokio::test]
async fn queue_is_fifo_and_paginated() {
    let (_, app) = loaded(sine_model(), config((0.0, 1.0)));
    for k in 0..5 {
        detect(&app, &sine(&format!("q{k}"), 24, 0.02 * k as f64)).await;
    }
    let (_, page) = call_json(&app, "GET", "/queue?limit=2&offset=1", None).await;
    assert_eq!(page["total"], 5);
    let ids: Vec<&str> = page["items"]
        .as_array()
        .unwrap()
        .iter()
        .map(|i| i["series_id"].as_str().unwrap())
        .collect();
    assert_eq!(ids, ["q1", "q2"]);
}

#[tokio::test]
async fn only_uncertain_detections_are_queued() {
    let models = sine_model();
    let rep = models.models()[0].representative().clone();
    let (_, app) = loaded(models, config((0.0, 0.999)));
    detect(&app, &rep).await;
    let odd = detect(&app, &sine("odd", 24, 0.4)).await;
    let (_, queue) = call_json(&app, "GET", "/queue", None).await;
    let expected = u64::from(odd["classification"] == "uncertain");
    assert_eq!(queue["total"].as_u64().unwrap(), expected);
}

#[tokio::test]
async fn normal_verdict_does_not_lower_the_score() {
    let (_, app) = loaded(sine_model(), config((0.0, 1.0)));
    let q = sine("q", 24, 0.3);
    let before = detect(&app, &q).await;
    let fb = json!({ "item_id": before["item_id"], "label": "normal" });
    call_json(&app, "POST", "/feedback", Some(fb)).await;
    let after = detect(&app, &q).await;
    assert!(after["score"].as_f64().unwrap() >= before["score"].as_f64().unwrap());
    assert_eq!(after["model_version"], 2);
}

#[tokio::test]
async fn anomalous_verdict_on_single_count_path_clears_the_mask() {
    let rep = TimeSeries::new("r", vec![0.0, 1.0, 2.0, 3.0]);
    let model = NormalModel::from_paths(
        rep.clone(),
        4,
        vec![WarpingPath::diagonal(4)],
        1,
        Default::default(),
        Default::default(),
    )
    .unwrap();
    let (state, app) = loaded(ModelSet::single(model), config((0.0, 1.0)));
    let v = detect(&app, &rep).await;
    let fb = json!({ "item_id": v["item_id"], "label": "anomalous" });
    assert_eq!(
        call_json(&app, "POST", "/feedback", Some(fb)).await.0,
        StatusCode::OK
    );

    let live = state.snapshot().unwrap().models;
    let m = &live.models()[0];
    for k in 1..4 {
        let pos = Pos::new(k, k);
        assert_eq!(m.matrix().count_paths(pos).unwrap(), 0);
        assert!(!m.mask().allows(k, k));
    }
}

#[tokio::test]
async fn get_after_post_is_byte_identical() {
    let (_, app) = loaded(sine_model(), ServiceConfig::default());
    let doc = serialize_model_set(&five_path_model());
    let (status, r) = call_json(
        &app,
        "POST",
        "/model",
        Some(serde_json::from_str(&doc).unwrap()),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(r["model_version"], 2);
    let (status, body, version) = call(&app, "GET", "/model", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, doc);
    assert_eq!(version.as_deref(), Some("2"));
}

#[tokio::test]
async fn schema_mismatch_is_rejected() {
    let (_, app) = loaded(sine_model(), ServiceConfig::default());
    let mut doc: Value = serde_json::from_str(&serialize_model_set(&five_path_model())).unwrap();
    doc["version"] = json!(99);
    assert_eq!(
        call_json(&app, "POST", "/model", Some(doc)).await.0,
        StatusCode::BAD_REQUEST
    );
    let (status, _, _) = call(&app, "POST", "/model", Some("[]".into())).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn heatmap_peaks_at_the_shared_diagonal_cell() {
    let (_, app) = loaded(five_path_model(), ServiceConfig::default());
    let (status, v) = call_json(&app, "GET", "/model/heatmap", None).await;
    assert_eq!(status, StatusCode::OK);
    let grid: Vec<Vec<f64>> = serde_json::from_value(v["patterns"][0]["grid"].clone()).unwrap();
    assert!(grid.iter().flatten().all(|x| (0.0..=1.0).contains(x)));
    let mut best = (0.0, (0, 0));
    for (r, row) in grid.iter().enumerate() {
        for (c, &x) in row.iter().enumerate() {
            if (r, c) != (3, 3) && x > best.0 {
                best = (x, (r, c));
            }
        }
    }
    assert_eq!(best.1, (1, 1));
}

#[tokio::test]
async fn series_lookup() {
    let (_, app) = loaded(sine_model(), ServiceConfig::default());
    detect(&app, &sine("known", 24, 0.1)).await;
    let (status, v) = call_json(&app, "GET", "/series/known", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["series"]["id"], "known");
    assert!(v["outcome"]["score"].is_number());
    assert_eq!(
        call_json(&app, "GET", "/series/nope", None).await.0,
        StatusCode::NOT_FOUND
    );
}

#[tokio::test]
async fn anonymous_series_get_generated_ids() {
    let (_, app) = loaded(sine_model(), ServiceConfig::default());
    let body = json!({ "series": { "values": sine("", 24, 0.0).values } });
    let (_, v) = call_json(&app, "POST", "/detect", Some(body)).await;
    let id = v["series_id"].as_str().unwrap().to_string();
    assert!(!id.is_empty());
    assert_eq!(
        call_json(&app, "GET", &format!("/series/{id}"), None)
            .await
            .0,
        StatusCode::OK
    );
}

#[tokio::test]
async fn expired_items_never_update_the_model() {
    let mut cfg = config((0.0, 1.0));
    cfg.ttl = Some(Duration::ZERO);
    let (state, app) = loaded(sine_model(), cfg);
    let v = detect(&app, &sine("q", 24, 0.1)).await;
    let (_, expired) = call_json(&app, "GET", "/queue?status=expired", None).await;
    assert_eq!(expired["total"], 1);
    let fb = json!({ "item_id": v["item_id"], "label": "normal" });
    assert_eq!(
        call_json(&app, "POST", "/feedback", Some(fb)).await.0,
        StatusCode::CONFLICT
    );
    assert_eq!(state.snapshot().unwrap().version, 1);
}

#[tokio::test]
async fn loading_a_new_model_expires_pending_items() {
    let (_, app) = loaded(sine_model(), config((0.0, 1.0)));
    let v = detect(&app, &sine("q", 24, 0.1)).await;
    let doc: Value = serde_json::from_str(&serialize_model_set(&five_path_model())).unwrap();
    call_json(&app, "POST", "/model", Some(doc)).await;
    let fb = json!({ "item_id": v["item_id"], "label": "normal" });
    assert_eq!(
        call_json(&app, "POST", "/feedback", Some(fb)).await.0,
        StatusCode::CONFLICT
    );
}

#[tokio::test]
async fn feedback_log_replays_to_the_live_model() {
    let (state, app) = loaded(sine_model(), config((0.0, 1.0)));
    for k in 0..12 {
        let v = detect(
            &app,
            &sine(&format!("q{k}"), 24, 0.05 * (k % 6) as f64 - 0.1),
        )
        .await;
        let label = if k % 3 == 0 { "anomalous" } else { "normal" };
        let fb = json!({ "item_id": v["item_id"], "label": label });
        assert_eq!(
            call_json(&app, "POST", "/feedback", Some(fb)).await.0,
            StatusCode::OK
        );
    }
    let (base, log) = state.history().unwrap();
    assert_eq!(log.len(), 12);
    let live = state.snapshot().unwrap();
    assert_eq!(live.version, 13);
    assert_eq!(replay(&base, &log).unwrap(), *live.models);
}

#[tokio::test]
async fn data_dir_restores_snapshot_and_version() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ServiceConfig {
        data_dir: Some(dir.path().to_path_buf()),
        ..config((0.0, 1.0))
    };
    let (state, app) = loaded(sine_model(), cfg.clone());
    for k in 0..4 {
        let v = detect(&app, &sine(&format!("q{k}"), 24, 0.1 * k as f64)).await;
        let label = if k == 2 { "anomalous" } else { "normal" };
        call_json(
            &app,
            "POST",
            "/feedback",
            Some(json!({ "item_id": v["item_id"], "label": label })),
        )
        .await;
    }
    let live = state.snapshot().unwrap();

    let restored = AppState::new(cfg).unwrap().snapshot().unwrap();
    assert_eq!(restored.version, live.version);
    assert_eq!(*restored.models, *live.models);

    let stored = std::fs::read_to_string(dir.path().join("model.json")).unwrap();
    assert_eq!(deserialize_model_set(&stored).unwrap(), sine_model());
}
