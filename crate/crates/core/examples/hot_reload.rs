use std::sync::Arc;

use serde_json::{json, Value};
use tmk_qa::feedback::FeedbackStore;
use tmk_qa::server::{self, AppState};
use tmk_qa::{demo, model, EngineConfig};

#[tokio::main]
async fn main() {
    let dir = std::env::temp_dir().join(format!("tmkqa-reload-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let state = AppState::new(
        FeedbackStore::open(dir.join("feedback.jsonl")).unwrap(),
        Some("secret".into()),
        demo::templates(),
        EngineConfig::default(),
        demo::DEFAULT_SEED,
    );
    state.publish(demo::snapshot().0);

    let mut next = demo::model();
    next.version = "1.1.0".into();
    let path = dir.join("model.json");
    std::fs::write(&path, model::serialize(&next)).unwrap();

    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let base = format!("http://{}/api/v1", listener.local_addr().unwrap());
    let app = server::router(Arc::new(state), None);
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    let http = reqwest::Client::new();

    let ask = |http: reqwest::Client, base: String| async move {
        let v: Value = http
            .post(format!("{base}/ask"))
            .json(&json!({"question": "What is an alignment score?"}))
            .send()
            .await
            .unwrap()
            .json()
            .await
            .unwrap();
        v["model_version"].as_str().unwrap().to_owned()
    };
    let asks: Vec<_> = (0..20).map(|_| tokio::spawn(ask(http.clone(), base.clone()))).collect();
    let reload: Value = http
        .post(format!("{base}/admin/reload"))
        .bearer_auth("secret")
        .json(&json!({"model_path": path}))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    println!("reload: {reload}");
    for a in asks {
        print!("{} ", a.await.unwrap());
    }
    println!("\nafter: {}", ask(http.clone(), base.clone()).await);
    std::fs::remove_dir_all(dir).unwrap();
}
