//! Configuration file, environment override and on-disk persistence.

#[path = "support/http.rs"]
mod http;

use http::{fixture_body, Server};
use std::sync::Arc;
use ticketflow_core::warehouse::SystemClock;
use ticketflow_service::{AppState, ServiceConfig, LISTEN_ENV};

#[test]
fn environment_overrides_the_listen_address() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("service.json");
    std::fs::write(&path, r#"{"listen": "127.0.0.1:7001", "queue_limit": 10}"#).unwrap();
    let cfg = ServiceConfig::from_path(&path).unwrap();
    assert_eq!(cfg.listen, "127.0.0.1:7001");
    // the only test in this binary touching the variable
    std::env::set_var(LISTEN_ENV, "0.0.0.0:9009");
    let cfg = cfg.with_env().unwrap();
    std::env::remove_var(LISTEN_ENV);
    assert_eq!(cfg.listen, "0.0.0.0:9009");
    assert_eq!(cfg.queue_limit, 10);
}

#[test]
fn unknown_keys_are_refused() {
    let err = ServiceConfig::from_json_str(r#"{"lisen": "x"}"#, "cfg.json").unwrap_err();
    assert!(err.to_string().contains("lisen"), "{err}");
}

#[tokio::test]
async fn records_survive_a_restart() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ServiceConfig {
        data_dir: Some(dir.path().to_path_buf()),
        ..ServiceConfig::default()
    };
    let s = Server::with_state(AppState::from_config(&cfg, Arc::new(SystemClock)).unwrap()).await;
    assert_eq!(s.post("/v1/tickets", &fixture_body("train ticket", "keep-1", 3)).await.0, 201);
    s.stop().await;

    let s = Server::with_state(AppState::from_config(&cfg, Arc::new(SystemClock)).unwrap()).await;
    let (code, rec) = s.get("/v1/records/keep-1").await;
    assert_eq!(code, 200);
    assert_eq!(rec["data"]["latest"]["record"]["category"], "train ticket");
    s.stop().await;
}
