mod common;

use axum::body::{to_bytes, Body};
use axum::http::{header, Request, StatusCode};
use axum::Router;
use serde_json::{json, Value};
use tower::ServiceExt;

use tmk_qa::server::{self, ServerConfig, SESSION_HEADER};

fn app(state: std::sync::Arc<tmk_qa::server::AppState>) -> Router {
    server::router(state, None)
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>, token: Option<&str>) -> (StatusCode, Value, Option<String>) {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(t) = token {
        req = req.header(header::AUTHORIZATION, format!("Bearer {t}"));
    }
    let body = match body {
        Some(v) => {
            req = req.header(header::CONTENT_TYPE, "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    let session = resp.headers().get(SESSION_HEADER).map(|v| v.to_str().unwrap().to_owned());
    let bytes = to_bytes(resp.into_body(), 1 << 20).await.unwrap();
    let value = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
    (status, value, session)
}

#[tokio::test]
async fn ask_answers_worked_example() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(common::state(dir.path(), true));
    let (status, v, session) = call(&app, "POST", "/api/v1/ask", Some(json!({"question": "What is an alignment score?"})), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["kind"], "answer");
    assert_eq!(v["intent"], "vocabulary");
    assert_eq!(v["object"], "alignment-score");
    assert_eq!(v["model_version"], "1.0.0");
    assert_eq!(v["feedback_prompt"], "Was this answer helpful?");
    assert_eq!(session.as_deref(), v["session_id"].as_str());
}

#[tokio::test]
async fn ask_echoes_session_and_is_stateless() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(common::state(dir.path(), true));
    let body = json!({"question": "How do I do a training proposal?", "session_id": "abc"});
    let (_, a, s) = call(&app, "POST", "/api/v1/ask", Some(body.clone()), None).await;
    let (_, b, _) = call(&app, "POST", "/api/v1/ask", Some(body), None).await;
    assert_eq!(s.as_deref(), Some("abc"));
    for key in ["kind", "text", "intent", "object"] {
        assert_eq!(a[key], b[key], "{key}");
    }
    assert_ne!(a["message_id"], b["message_id"]);
}

#[tokio::test]
async fn ask_rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(common::state(dir.path(), true));
    for body in [json!({"question": ""}), json!({"question": "   "}), json!({"q": "x"}), json!({"question": "x".repeat(2001)})] {
        let (status, _, _) = call(&app, "POST", "/api/v1/ask", Some(body), None).await;
        assert_eq!(status, StatusCode::BAD_REQUEST);
    }
    let (status, _, _) = call(&app, "POST", "/api/v1/ask", Some(json!({"question": "x".repeat(2000)})), None).await;
    assert_eq!(status, StatusCode::OK);
}

#[tokio::test]
async fn no_snapshot_is_503() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(common::state(dir.path(), false));
    let (s1, _, _) = call(&app, "POST", "/api/v1/ask", Some(json!({"question": "What is a cohort?"})), None).await;
    let (s2, _, _) = call(&app, "GET", "/api/v1/introspect", None, None).await;
    let (s3, _, _) = call(&app, "GET", "/api/v1/health", None, None).await;
    assert_eq!([s1, s2, s3], [StatusCode::SERVICE_UNAVAILABLE; 3]);
}

#[tokio::test]
async fn fallback_carries_suggestions() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(common::state(dir.path(), true));
    let (_, v, _) = call(&app, "POST", "/api/v1/ask", Some(json!({"question": "What is the weather today?"})), None).await;
    assert_eq!(v["kind"], "fallback");
    assert!(v.get("intent").is_none());
    assert!(!v["suggestions"].as_array().unwrap().is_empty());
}

#[tokio::test]
async fn feedback_flow() {
    let dir = tempfile::tempdir().unwrap();
    let state = common::state(dir.path(), true);
    let app = app(state.clone());
    let (_, v, _) = call(&app, "POST", "/api/v1/ask", Some(json!({"question": "What is a cohort?", "session_id": "s"})), None).await;
    let id = v["message_id"].as_str().unwrap();
    let ok = json!({"session_id": "s", "message_id": id, "helpful": "yes"});
    assert_eq!(call(&app, "POST", "/api/v1/feedback", Some(ok), None).await.0, StatusCode::OK);
    let unknown = json!({"session_id": "s", "message_id": "nope", "helpful": "yes"});
    assert_eq!(call(&app, "POST", "/api/v1/feedback", Some(unknown), None).await.0, StatusCode::NOT_FOUND);
    let maybe = json!({"session_id": "s", "message_id": id, "helpful": "maybe"});
    assert_eq!(call(&app, "POST", "/api/v1/feedback", Some(maybe), None).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(call(&app, "POST", "/api/v1/feedback", Some(json!({"x": 1})), None).await.0, StatusCode::BAD_REQUEST);
    let records = state.feedback().records().unwrap();
    assert_eq!(records.len(), 1);
    assert_eq!(records[0].question, "What is a cohort?");
}

#[tokio::test]
async fn introspect_lists_entities() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(common::state(dir.path(), true));
    let (status, v, _) = call(&app, "GET", "/api/v1/introspect", None, None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["glossary"].as_array().unwrap().len(), 41);
    assert_eq!(v["tasks"].as_array().unwrap().len(), 10);
    assert_eq!(v["intents"], json!(["vocabulary", "goals", "inputs", "outputs", "subtasks"]));
    let (status, v, _) = call(&app, "GET", "/api/v1/health", None, None).await;
    assert_eq!((status, v["model_version"].clone()), (StatusCode::OK, json!("1.0.0")));
}

#[tokio::test]
async fn reload_swaps_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(common::state(dir.path(), true));
    let mut model = tmk_qa::demo::model();
    model.version = "1.2.0".into();
    let mut extra = model.glossary[0].clone();
    extra.id = "microcredential".into();
    extra.term = "Microcredential".into();
    extra.aliases.clear();
    extra.definition = "a short certification of one skill".into();
    model.glossary.push(extra);
    let path = dir.path().join("m.json");
    std::fs::write(&path, tmk_qa::model::serialize(&model)).unwrap();
    let (status, v, _) = call(&app, "POST", "/api/v1/admin/reload", Some(json!({"model_path": path})), Some(common::ADMIN_TOKEN)).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    assert_eq!(v["model_version"], "1.2.0");
    assert_eq!(v["train_accuracy"], 1.0);
    assert!(v["dataset_size"].as_u64().unwrap() > 900);
    let (_, v, _) = call(&app, "GET", "/api/v1/introspect", None, None).await;
    assert_eq!(v["glossary"].as_array().unwrap().len(), 42);
    let (_, v, _) = call(&app, "POST", "/api/v1/ask", Some(json!({"question": "What is a microcredential?"})), None).await;
    assert_eq!((v["object"].clone(), v["model_version"].clone()), (json!("microcredential"), json!("1.2.0")));
}

#[tokio::test]
async fn reload_with_dataset_file() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(common::state(dir.path(), false));
    let model_path = dir.path().join("model.json");
    std::fs::write(&model_path, tmk_qa::demo::MODEL_JSON).unwrap();
    let ds_path = dir.path().join("ds.jsonl");
    let (_, ds) = tmk_qa::demo::snapshot();
    let small: String = ds.to_jsonl().lines().step_by(2).map(|l| format!("{l}\n")).collect();
    std::fs::write(&ds_path, small).unwrap();
    let body = json!({"model_path": model_path, "dataset_path": ds_path, "seed": 3});
    let (status, v, _) = call(&app, "POST", "/api/v1/admin/reload", Some(body), Some(common::ADMIN_TOKEN)).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    assert_eq!(v["dataset_size"].as_u64().unwrap() as usize, ds.len().div_ceil(2));
}

#[tokio::test]
async fn reload_rejects_bad_token_and_bad_model() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(common::state(dir.path(), true));
    let good = common::write_bumped_model(dir.path(), "9.9.9");
    let body = json!({"model_path": good});
    assert_eq!(call(&app, "POST", "/api/v1/admin/reload", Some(body.clone()), Some("wrong")).await.0, StatusCode::UNAUTHORIZED);
    assert_eq!(call(&app, "POST", "/api/v1/admin/reload", Some(body), None).await.0, StatusCode::UNAUTHORIZED);

    let mut model = tmk_qa::demo::model();
    model.version = "2.0.0".into();
    let leaf = model.tasks.iter().position(|t| t.id == "submit-training-request").unwrap();
    model.tasks[leaf].subtasks = vec!["create-training-plan".into()];
    model.tasks[leaf].primitive_action = tmk_qa::model::PrimitiveAction::None;
    let cyclic = dir.path().join("cyclic.json");
    std::fs::write(&cyclic, tmk_qa::model::serialize(&model)).unwrap();
    let (status, v, _) = call(&app, "POST", "/api/v1/admin/reload", Some(json!({"model_path": cyclic})), Some(common::ADMIN_TOKEN)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let codes: Vec<&str> = v["report"]["errors"].as_array().unwrap().iter().map(|e| e["code"].as_str().unwrap()).collect();
    assert!(codes.contains(&"CYCLE"), "{codes:?}");
    let (status, v, _) = call(&app, "POST", "/api/v1/admin/reload", Some(json!({"model_path": dir.path().join("missing.json")})), Some(common::ADMIN_TOKEN)).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{v}");
    let (_, v, _) = call(&app, "GET", "/api/v1/health", None, None).await;
    assert_eq!(v["model_version"], "1.0.0");
}

#[test]
fn config_from_vars() {
    let vars = |k: &str| match k {
        "TMKQA_LISTEN" => Some("0.0.0.0:9000".to_owned()),
        "TMKQA_THRESHOLD" => Some("0.7".to_owned()),
        "TMKQA_SUGGESTIONS" => Some("5".to_owned()),
        "TMKQA_ADMIN_TOKEN" => Some("t".to_owned()),
        _ => None,
    };
    let cfg = ServerConfig::from_vars(vars).unwrap();
    assert_eq!(cfg.listen.port(), 9000);
    assert_eq!(cfg.engine.confidence_threshold, 0.7);
    assert_eq!(cfg.engine.suggestion_count, 5);
    assert_eq!(cfg.admin_token.as_deref(), Some("t"));
    assert!(ServerConfig::from_vars(|k| (k == "TMKQA_THRESHOLD").then(|| "2".to_owned())).is_err());
    assert!(ServerConfig::from_vars(|k| (k == "TMKQA_LISTEN").then(|| "nope".to_owned())).is_err());
}

#[tokio::test]
async fn cors_preflight_allowed() {
    let dir = tempfile::tempdir().unwrap();
    let app = server::router(common::state(dir.path(), true), Some("http://localhost:5173"));
    let req = Request::builder()
        .method("OPTIONS")
        .uri("/api/v1/ask")
        .header(header::ORIGIN, "http://localhost:5173")
        .header(header::ACCESS_CONTROL_REQUEST_METHOD, "POST")
        .body(Body::empty())
        .unwrap();
    let resp = app.oneshot(req).await.unwrap();
    assert_eq!(resp.headers()[header::ACCESS_CONTROL_ALLOW_ORIGIN], "http://localhost:5173");
}
