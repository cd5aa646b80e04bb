use std::sync::Arc;

use tmk_qa::server::{self, ServerConfig};
use tmk_qa::{demo, ClassifierConfig, Snapshot};

#[tokio::main]
async fn main() {
    tracing_subscriber::fmt().init();
    let mut cfg = ServerConfig::from_env().unwrap();
    cfg.admin_token.get_or_insert_with(|| "change-me".to_owned());
    let state = server::state_from_config(&cfg).unwrap();
    if state.current().is_none() {
        let (snapshot, _) =
            Snapshot::build(demo::model(), &demo::templates(), cfg.seed, &ClassifierConfig::default(), cfg.engine.clone())
                .unwrap();
        state.publish(snapshot);
    }
    println!("try: curl -s localhost:{}/api/v1/ask -d '{{\"question\":\"What is an alignment score?\"}}'", cfg.listen.port());
    server::serve(Arc::new(state), &cfg).await.unwrap();
}
