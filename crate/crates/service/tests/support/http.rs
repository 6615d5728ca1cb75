//! A live server on an ephemeral port, fixture bodies, and envelope checks.

#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use std::sync::Arc;
use ticketflow_core::fixtures::{default_layout, generate_ticket};
use ticketflow_core::warehouse::SystemClock;
use ticketflow_core::{CategoryRegistry, PipelineConfig, Warehouse};
use ticketflow_service::{serve, AppState};
use tokio::sync::oneshot;

pub struct Server {
    pub base: String,
    pub client: reqwest::Client,
    stop: Option<oneshot::Sender<()>>,
    task: Option<tokio::task::JoinHandle<()>>,
}

impl Server {
    pub async fn start() -> Self {
        Self::with_state(AppState::new(
            Arc::new(Warehouse::in_memory_default()),
            PipelineConfig::default(),
            Arc::new(SystemClock),
            50,
        ))
        .await
    }

    pub async fn with_state(state: AppState) -> Self {
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let addr = listener.local_addr().unwrap();
        let (tx, rx) = oneshot::channel();
        let task = tokio::spawn(async move {
            serve(listener, Arc::new(state), async {
                let _ = rx.await;
            })
            .await
            .unwrap();
        });
        Self {
            base: format!("http://{addr}"),
            client: reqwest::Client::new(),
            stop: Some(tx),
            task: Some(task),
        }
    }

    pub async fn stop(mut self) {
        if let Some(tx) = self.stop.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.task.take() {
            t.await.unwrap();
        }
    }

    pub async fn get(&self, path: &str) -> (u16, Value) {
        let resp = self.client.get(format!("{}{path}", self.base)).send().await.unwrap();
        envelope(resp).await
    }

    pub async fn post(&self, path: &str, body: &Value) -> (u16, Value) {
        self.post_raw(path, serde_json::to_vec(body).unwrap()).await
    }

    pub async fn post_raw(&self, path: &str, body: Vec<u8>) -> (u16, Value) {
        let resp = self
            .client
            .post(format!("{}{path}", self.base))
            .header("content-type", "application/json")
            .body(body)
            .send()
            .await
            .unwrap();
        envelope(resp).await
    }
}

/// Status and body of a response after checking the envelope shape.
pub async fn envelope(resp: reqwest::Response) -> (u16, Value) {
    let code = resp.status().as_u16();
    let body: Value = resp.json().await.expect("every response is JSON");
    if let Err(e) = check_envelope(code, &body) {
        panic!("{e}: {body}");
    }
    (code, body)
}

pub fn check_envelope(code: u16, body: &Value) -> Result<(), String> {
    let obj = body.as_object().ok_or("envelope is not an object")?;
    for key in obj.keys() {
        if !["status", "data", "error", "snapshot_ts"].contains(&key.as_str()) {
            return Err(format!("unexpected envelope key {key}"));
        }
    }
    obj.get("snapshot_ts").and_then(Value::as_u64).ok_or("snapshot_ts missing")?;
    match (obj.get("status").and_then(Value::as_str), obj.get("data"), obj.get("error")) {
        (Some("ok"), Some(_), None) if code < 400 => Ok(()),
        (Some("error"), None, Some(e)) if code >= 400 => {
            e.get("code").and_then(Value::as_str).ok_or("error.code missing")?;
            e.get("message").and_then(Value::as_str).ok_or("error.message missing")?;
            Ok(())
        }
        _ => Err(format!("status {code} does not match envelope")),
    }
}

/// A noise-free generated ticket as a request body.
pub fn fixture_body(category: &str, id: &str, seed: u64) -> Value {
    let registry = CategoryRegistry::shipped();
    let layout = default_layout(category).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let img = generate_ticket(id, category, &layout, &registry, &mut rng).unwrap();
    serde_json::to_value(&img).unwrap()
}

/// Same ticket, with the classifier unsure of it.
pub fn unsure_fixture_body(category: &str, id: &str, seed: u64) -> Value {
    let mut v = fixture_body(category, id, seed);
    v["ground_truth"]["class_conf"] = json!(0.5);
    v
}

/// Submit a ticket the classifier is unsure of, find it in the audit queue,
/// assign it a category the registry does not know, and check it lands in
/// the unfamiliar push set. Every step goes through `/v1`.
pub async fn audit_round_trip(server: &Server, id: &str) -> Result<(), String> {
    let (code, body) = server.post("/v1/tickets", &unsure_fixture_body("quota ticket", id, 11)).await;
    if code != 201 {
        return Err(format!("submit returned {code}: {body}"));
    }
    let ticket = &body["data"]["tickets"][0];
    if ticket["status"] != "needs_audit" || ticket["id"] != id {
        return Err(format!("ticket was not diverted: {ticket}"));
    }
    let mut cursor: Option<String> = None;
    let mut version = None;
    loop {
        let path = match &cursor {
            Some(c) => format!("/v1/audit/queue?limit=2&cursor={c}"),
            None => "/v1/audit/queue?limit=2".to_string(),
        };
        let (code, page) = server.get(&path).await;
        if code != 200 {
            return Err(format!("queue returned {code}: {page}"));
        }
        for item in page["data"]["items"].as_array().ok_or("queue items missing")? {
            if item["record"]["id"] == id {
                version = item["version"].as_u64();
            }
        }
        match page["data"]["next_cursor"].as_str() {
            Some(c) if version.is_none() => cursor = Some(c.to_string()),
            _ => break,
        }
    }
    let version = version.ok_or("diverted ticket missing from the audit queue")?;
    let decision = json!({
        "auditor": "round-trip",
        "verdict": "overturned",
        "supplied": {"category": "parking voucher"},
        "version": version,
    });
    let (code, updated) = server.post(&format!("/v1/audit/{id}"), &decision).await;
    if code != 200 {
        return Err(format!("audit returned {code}: {updated}"));
    }
    if updated["data"]["version"].as_u64() != Some(version + 1) {
        return Err(format!("audit did not produce the next version: {updated}"));
    }
    // the same decision against the old version is now stale
    let (code, _) = server.post(&format!("/v1/audit/{id}"), &decision).await;
    if code != 409 {
        return Err(format!("stale decision returned {code}"));
    }
    let (code, sets) = server.get("/v1/warehouse/push-sets").await;
    if code != 200 {
        return Err(format!("push-sets returned {code}"));
    }
    let unfamiliar = sets["data"]["unfamiliar"].as_array().ok_or("unfamiliar missing")?;
    if !unfamiliar.iter().any(|v| v == id) {
        return Err(format!("{id} missing from the unfamiliar push set: {sets}"));
    }
    let (_, queue) = server.get("/v1/audit/queue?limit=1000").await;
    if queue["data"]["items"].as_array().is_some_and(|a| a.iter().any(|i| i["record"]["id"] == id)) {
        return Err("decided ticket is still queued".into());
    }
    Ok(())
}
