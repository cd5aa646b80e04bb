#![allow(dead_code)]

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use tmk_qa::feedback::FeedbackStore;
use tmk_qa::server::{self, AppState};
use tmk_qa::{demo, EngineConfig, Snapshot};

pub const ADMIN_TOKEN: &str = "test-token";

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn micro_model_json() -> String {
    std::fs::read_to_string(fixture("micro_kb.json")).unwrap()
}

/// App state over the demo snapshot (or none), with feedback in `dir`.
pub fn state(dir: &Path, loaded: bool) -> Arc<AppState> {
    let store = FeedbackStore::open(dir.join("feedback.jsonl")).unwrap();
    let state = AppState::new(
        store,
        Some(ADMIN_TOKEN.to_owned()),
        demo::templates(),
        EngineConfig::default(),
        demo::DEFAULT_SEED,
    );
    if loaded {
        state.publish(demo::snapshot().0);
    }
    Arc::new(state)
}

/// The demo pack with its version bumped, written to `dir`.
pub fn write_bumped_model(dir: &Path, version: &str) -> PathBuf {
    let mut model = demo::model();
    model.version = version.to_owned();
    let path = dir.join(format!("model-{version}.json"));
    std::fs::write(&path, tmk_qa::model::serialize(&model)).unwrap();
    path
}

/// Serves `state` on an ephemeral local port.
pub async fn spawn_server(state: Arc<AppState>) -> SocketAddr {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move {
        axum::serve(listener, server::router(state, None)).await.unwrap();
    });
    addr
}

pub fn demo_snapshot() -> Snapshot {
    demo::snapshot().0
}
