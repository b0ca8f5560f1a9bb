mod common;

use std::sync::Arc;

use adaptrec::http::router;
use adaptrec::Engine;
use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

async fn send(app: &Router, method: &str, uri: &str, body: Option<Value>, time: Option<i64>) -> (StatusCode, Value) {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(t) = time {
        req = req.header("x-event-time", t.to_string());
    }
    let req = match body {
        Some(b) => req
            .header("content-type", "application/json")
            .body(Body::from(b.to_string()))
            .unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()))
    };
    (status, value)
}

fn app() -> (tempfile::TempDir, Router) {
    let (dir, config) = common::two_contexts();
    let engine = Arc::new(Engine::new(config).unwrap());
    (dir, router(engine))
}

#[tokio::test]
async fn conversation_round_trip() {
    let (_dir, app) = app();
    let (st, v) = send(&app, "POST", "/sessions", None, Some(100)).await;
    assert_eq!(st, StatusCode::OK);
    let sid = v["session_id"].as_str().unwrap().to_string();

    let (st, v) = send(&app, "POST", &format!("/sessions/{sid}/query"), Some(json!({"keywords": ["k"]})), Some(101)).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(v["question"]["keyword"], "k2");
    assert_eq!(v["question"]["memberships"][0], json!({"context": "alpha", "membership": 0.5}));
    assert!(v.get("recommendations").is_none());

    let (st, _) = send(&app, "GET", &format!("/sessions/{sid}/recommendations"), None, None).await;
    assert_eq!(st, StatusCode::CONFLICT);

    let (_, v) = send(&app, "POST", &format!("/sessions/{sid}/answer"), Some(json!({"keyword": "k2", "relevant": true})), Some(102)).await;
    assert_eq!(v["question"]["keyword"], "k4");
    let (st, v) = send(&app, "POST", &format!("/sessions/{sid}/answer"), Some(json!({"keyword": "k4", "relevant": true})), Some(103)).await;
    assert_eq!(st, StatusCode::OK);
    let recs = v["recommendations"].as_array().unwrap();
    assert!(!recs.is_empty());
    assert!(recs[0]["score"].as_f64().unwrap() > 0.0);
    let peak = v["category"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["membership"].as_f64().unwrap())
        .fold(0.0, f64::max);
    assert_eq!(peak, 1.0);

    let (st, v) = send(&app, "GET", &format!("/sessions/{sid}/recommendations?n=2"), None, None).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(v["recommendations"].as_array().unwrap().len(), 2);

    let (_, v) = send(&app, "GET", &format!("/sessions/{sid}"), None, None).await;
    assert_eq!(v["profile"], json!(["k"]));
    assert_eq!(v["created"], 100);
}

#[tokio::test]
async fn clicks_feed_the_path_log() {
    let (_dir, app) = app();
    let (_, v) = send(&app, "POST", "/sessions", Some(json!({"user_id": "ann"})), Some(0)).await;
    let sid = v["session_id"].as_str().unwrap().to_string();
    for (i, d) in ["a1", "a2", "a4"].iter().enumerate() {
        let (st, v) = send(&app, "POST", &format!("/sessions/{sid}/click"), Some(json!({"document_id": d})), Some(10 * i as i64)).await;
        assert_eq!(st, StatusCode::OK);
        assert!(v["related"].is_array());
    }
    let (_, stats) = send(&app, "GET", "/admin/stats", None, None).await;
    assert_eq!(stats["clicks"], 3);
    assert_eq!(stats["paths"], 1);

    let (st, report) = send(&app, "POST", "/admin/adapt-now", None, None).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(report["paths"], 1);
    let (_, ctx) = send(&app, "GET", "/admin/contexts/alpha/stats", None, None).await;
    assert_eq!(ctx["paths"], 1);
    assert_eq!(ctx["generation"], 1);

    let (_, v) = send(&app, "GET", "/admin/contexts/alpha/proximity?network=traversal&a=a1&b=a2", None, None).await;
    assert_eq!(v["value"], 1.0);
    let (_, v) = send(&app, "GET", "/admin/contexts/alpha/proximity?network=traversal&a=a2&b=a1", None, None).await;
    assert_eq!(v["value"], 0.3);
    let (_, v) = send(&app, "GET", "/admin/contexts/alpha/proximity?network=traversal", None, None).await;
    assert_eq!(v["entries"].as_array().unwrap().len(), 5);

    let (_, v) = send(&app, "GET", "/documents/a1/related?network=traversal&n=1", None, None).await;
    assert_eq!(v["related"], json!([{"document_id": "a2", "activation": v["related"][0]["activation"]}]));
}

#[tokio::test]
async fn errors_are_structured() {
    let (_dir, app) = app();
    let (_, v) = send(&app, "POST", "/sessions", None, None).await;
    let sid = v["session_id"].as_str().unwrap().to_string();

    let (st, v) = send(&app, "POST", &format!("/sessions/{sid}/query"), Some(json!({"keywords": []})), None).await;
    assert_eq!(st, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["error"]["code"], "empty_profile");

    let (st, v) = send(&app, "POST", &format!("/sessions/{sid}/query"), Some(json!({"keywords": ["zz"]})), None).await;
    assert_eq!(st, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["error"]["code"], "unresolvable_profile");
    assert_eq!(v["error"]["details"]["keywords"], json!(["zz"]));

    let (st, v) = send(&app, "POST", "/sessions/nope/query", Some(json!({"keywords": ["k"]})), None).await;
    assert_eq!(st, StatusCode::NOT_FOUND);
    assert_eq!(v["error"]["code"], "unknown_session");

    let (st, v) = send(&app, "POST", &format!("/sessions/{sid}/click"), Some(json!({"document_id": "zz"})), None).await;
    assert_eq!(st, StatusCode::NOT_FOUND);
    assert_eq!(v["error"]["code"], "unknown_document");

    let (st, v) = send(&app, "POST", &format!("/sessions/{sid}/query"), Some(json!({"words": ["k"]})), None).await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"]["code"], "bad_request");

    let (st, _) = send(&app, "GET", "/documents/a1/related?network=ksp", None, None).await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
    let (st, _) = send(&app, "GET", "/admin/contexts/gamma/stats", None, None).await;
    assert_eq!(st, StatusCode::NOT_FOUND);
    let (st, _) = send(&app, "POST", "/sessions", Some(json!({"auto_answer_level": 2.0})), None).await;
    assert_eq!(st, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn admin_adds_contexts() {
    let (dir, app) = app();
    let path = dir.path().join("gamma.krc");
    std::fs::write(&path, "#krc 1\ng1\tk,k5\tg2\ng2\tk5\t\n").unwrap();
    let (st, v) = send(&app, "POST", "/admin/contexts", Some(json!({"record_file": path, "min_keyword_frequency": 1})), None).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(v["id"], "gamma");
    assert_eq!(v["keywords"], 2);
    let (st, v) = send(&app, "POST", "/admin/contexts", Some(json!({"record_file": path})), None).await;
    assert_eq!(st, StatusCode::CONFLICT);
    assert_eq!(v["error"]["code"], "duplicate_context");
    let (_, v) = send(&app, "GET", "/admin/contexts", None, None).await;
    assert_eq!(v.as_array().unwrap().len(), 3);
    let (_, v) = send(&app, "GET", "/admin/contexts/gamma/proximity?network=ksp&a=k&b=k5", None, None).await;
    assert_eq!(v["value"], 0.5);
    let (_, v) = send(&app, "GET", "/admin/contexts/gamma/proximity?network=ksp&a=k&b=nope", None, None).await;
    assert!(v["value"].is_null());
}

#[tokio::test]
async fn serves_static_assets_when_configured() {
    let (dir, mut config) = common::two_contexts();
    let ui = dir.path().join("ui");
    std::fs::create_dir(&ui).unwrap();
    std::fs::write(ui.join("index.html"), "<html></html>").unwrap();
    config.ui_dir = Some(ui);
    let app = router(Arc::new(Engine::new(config).unwrap()));
    let (st, v) = send(&app, "GET", "/index.html", None, None).await;
    assert_eq!(st, StatusCode::OK);
    assert_eq!(v, Value::String("<html></html>".into()));
}
