//! JSON-over-HTTP facade: ticket submission, record lookup, the audit queue,
//! push sets, warehouse statistics and evaluation metrics, all under `/v1`.

pub mod config;
pub mod envelope;

pub use config::{ServiceConfig, ServiceConfigError, LISTEN_ENV};
pub use envelope::{ApiError, Envelope, ErrorBody, Reply, Status};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::Router;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::future::Future;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use thiserror::Error;
use ticketflow_core::metrics::{p_char, p_ticket, SampleEval};
use ticketflow_core::preprocess::FixtureFile;
use ticketflow_core::warehouse::{
    AuditDecision, Clock, IngestReceipt, PushSets, StatsReport, StoreOptions, SystemClock, TimeWindow,
};
use ticketflow_core::{
    process_and_ingest, BackendSet, CategoryInfo, OutcomeStatus, PipelineConfig, ProcessOutcome, RawTicketImage,
    Stage, Warehouse, WarehouseError, WarehouseRecord,
};
use tokio::net::TcpListener;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error(transparent)]
    Config(#[from] ServiceConfigError),
    #[error("warehouse: {0}")]
    Warehouse(#[from] WarehouseError),
    #[error("cannot listen on {addr}: {source}")]
    Bind {
        addr: String,
        #[source]
        source: std::io::Error,
    },
    #[error("server: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Default)]
struct Counters {
    submitted: AtomicU64,
    accepted: AtomicU64,
    diverted: AtomicU64,
}

/// Shared state behind every handler.
pub struct AppState {
    pub warehouse: Arc<Warehouse>,
    pub pipeline: PipelineConfig,
    pub backends: BackendSet,
    pub clock: Arc<dyn Clock>,
    pub queue_limit: usize,
    counters: Counters,
    evaluation: Mutex<Option<EvalReport>>,
}

impl AppState {
    pub fn new(warehouse: Arc<Warehouse>, pipeline: PipelineConfig, clock: Arc<dyn Clock>, queue_limit: usize) -> Self {
        let backends = BackendSet::from_config(&pipeline.backends, &pipeline);
        Self {
            warehouse,
            pipeline,
            backends,
            clock,
            queue_limit,
            counters: Counters::default(),
            evaluation: Mutex::new(None),
        }
    }

    /// State for `cfg`, opening the on-disk warehouse when a directory is set.
    pub fn from_config(cfg: &ServiceConfig, clock: Arc<dyn Clock>) -> Result<Self, ServiceError> {
        let opts = StoreOptions {
            snapshot_every: cfg.snapshot_every,
            registry: cfg.pipeline.category_registry.clone(),
        };
        let warehouse = match &cfg.data_dir {
            Some(dir) => Warehouse::open(dir, opts, clock.clone())?,
            None => Warehouse::in_memory(opts, clock.clone()),
        };
        Ok(Self::new(Arc::new(warehouse), cfg.pipeline.clone(), clock, cfg.queue_limit))
    }

    fn now(&self) -> u64 {
        self.clock.now_ms()
    }

    fn reply<T>(&self, code: StatusCode, data: T) -> Reply<T> {
        Reply {
            code,
            data,
            snapshot_ts: self.now(),
        }
    }

    fn fail(&self, e: impl Into<ApiError>) -> ApiError {
        e.into().at(self.now())
    }
}

type Shared = Arc<AppState>;
type ApiResult<T> = Result<Reply<T>, ApiError>;

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/v1/tickets", post(submit))
        .route("/v1/records/{id}", get(record))
        .route("/v1/audit/queue", get(queue))
        .route("/v1/audit/{id}", post(decide))
        .route("/v1/warehouse/stats", get(stats))
        .route("/v1/warehouse/push-sets", get(push_sets))
        .route("/v1/metrics", get(metrics))
        .route("/v1/metrics/evals", post(evaluate))
        .route("/v1/categories", get(categories))
        .fallback(not_found)
        .with_state(state)
}

/// Serve on `listener` until `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    state: Shared,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> Result<(), ServiceError> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await?;
    Ok(())
}

/// Bind the configured address and serve until Ctrl-C.
pub async fn run(cfg: ServiceConfig) -> Result<(), ServiceError> {
    let state = Arc::new(AppState::from_config(&cfg, Arc::new(SystemClock))?);
    let listener = TcpListener::bind(&cfg.listen).await.map_err(|source| ServiceError::Bind {
        addr: cfg.listen.clone(),
        source,
    })?;
    eprintln!("listening on {}", listener.local_addr()?);
    serve(listener, state, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await
}

/// Decode a JSON body, reporting where it breaks the schema.
fn parse_body<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    let de = &mut serde_json::Deserializer::from_slice(body);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let mut path = e.path().to_string();
        let message = e.inner().to_string();
        // a missing field is reported at its parent; point at the field itself
        if let Some(field) = message.strip_prefix("missing field `").and_then(|m| m.split('`').next()) {
            path = if path == "." { field.to_string() } else { format!("{path}.{field}") };
        }
        ApiError::schema(path, message)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmittedTicket {
    pub id: String,
    pub version: u64,
    /// False when an identical submission was already stored.
    pub created: bool,
    pub status: OutcomeStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub divert_stage: Option<Stage>,
    pub info_level: u8,
    pub outcome: ProcessOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmitResult {
    pub tickets: Vec<SubmittedTicket>,
}

async fn submit(State(s): State<Shared>, body: Bytes) -> ApiResult<SubmitResult> {
    let file: FixtureFile = parse_body(&body).map_err(|e| e.at(s.now()))?;
    let raw = RawTicketImage::try_from(file).map_err(|m| s.fail(ticketflow_core::PipelineError::InvalidInput(m)))?;
    let worker = s.clone();
    let results = tokio::task::spawn_blocking(move || {
        process_and_ingest(&raw, &worker.pipeline, &worker.backends, &worker.warehouse)
    })
    .await
    .map_err(|e| s.fail(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string())))?
    .map_err(|e| s.fail(e))?;
    let tickets = results
        .into_iter()
        .map(|(outcome, receipt): (ProcessOutcome, IngestReceipt)| {
            if receipt.created {
                s.counters.submitted.fetch_add(1, Ordering::Relaxed);
                let c = match outcome.status {
                    OutcomeStatus::Accepted => &s.counters.accepted,
                    OutcomeStatus::NeedsAudit => &s.counters.diverted,
                };
                c.fetch_add(1, Ordering::Relaxed);
            }
            SubmittedTicket {
                id: receipt.id,
                version: receipt.version,
                created: receipt.created,
                status: outcome.status,
                divert_stage: outcome.divert_stage,
                info_level: receipt.level,
                outcome,
            }
        })
        .collect();
    Ok(s.reply(StatusCode::CREATED, SubmitResult { tickets }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordView {
    pub latest: WarehouseRecord,
    pub versions: u64,
}

async fn record(State(s): State<Shared>, Path(id): Path<String>) -> ApiResult<RecordView> {
    let latest = s
        .warehouse
        .get(&id)
        .ok_or_else(|| s.fail(WarehouseError::UnknownRecord(id.clone())))?;
    let versions = latest.version;
    Ok(s.reply(StatusCode::OK, RecordView { latest, versions }))
}

fn query_number(q: &BTreeMap<String, String>, key: &str) -> Result<Option<u64>, ApiError> {
    q.get(key)
        .map(|v| v.parse::<u64>().map_err(|_| ApiError::schema(key, format!("{v:?} is not a non-negative integer"))))
        .transpose()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueView {
    pub items: Vec<WarehouseRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub next_cursor: Option<String>,
}

async fn queue(State(s): State<Shared>, Query(q): Query<BTreeMap<String, String>>) -> ApiResult<QueueView> {
    let limit = query_number(&q, "limit").map_err(|e| e.at(s.now()))?;
    let limit = limit.map_or(s.queue_limit, |l| l as usize);
    if limit == 0 || limit > config::MAX_QUEUE_LIMIT {
        return Err(s.fail(ApiError::schema("limit", format!("must lie in 1..={}", config::MAX_QUEUE_LIMIT))));
    }
    let page = s
        .warehouse
        .pending_queue(limit, q.get("cursor").map(String::as_str))
        .map_err(|e| s.fail(e))?;
    Ok(s.reply(
        StatusCode::OK,
        QueueView {
            items: page.items,
            next_cursor: page.next_cursor,
        },
    ))
}

async fn decide(State(s): State<Shared>, Path(id): Path<String>, body: Bytes) -> ApiResult<WarehouseRecord> {
    let decision: AuditDecision = parse_body(&body).map_err(|e| e.at(s.now()))?;
    let updated = s.warehouse.audit_decide(&id, decision).map_err(|e| s.fail(e))?;
    Ok(s.reply(StatusCode::OK, updated))
}

async fn stats(State(s): State<Shared>, Query(q): Query<BTreeMap<String, String>>) -> ApiResult<StatsReport> {
    let window = TimeWindow {
        from: query_number(&q, "from").map_err(|e| e.at(s.now()))?,
        to: query_number(&q, "to").map_err(|e| e.at(s.now()))?,
    };
    let report = s
        .warehouse
        .stats_report(window, s.pipeline.tau_class, s.pipeline.scarce_min_count);
    Ok(s.reply(StatusCode::OK, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PushSetsView {
    pub tau_class: f64,
    pub scarce_min_count: usize,
    #[serde(flatten)]
    pub sets: PushSets,
}

async fn push_sets(State(s): State<Shared>) -> ApiResult<PushSetsView> {
    let sets = s
        .warehouse
        .select_push_sets(s.pipeline.tau_class, s.pipeline.scarce_min_count);
    Ok(s.reply(
        StatusCode::OK,
        PushSetsView {
            tau_class: s.pipeline.tau_class,
            scarce_min_count: s.pipeline.scarce_min_count,
            sets,
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalRequest {
    pub samples: Vec<SampleEval>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub samples: usize,
    pub p_char: f64,
    pub p_ticket: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsView {
    pub submitted: u64,
    pub accepted: u64,
    pub diverted: u64,
    pub records: usize,
    /// Most recent uploaded evaluation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evaluation: Option<EvalReport>,
}

async fn metrics(State(s): State<Shared>) -> ApiResult<MetricsView> {
    let view = MetricsView {
        submitted: s.counters.submitted.load(Ordering::Relaxed),
        accepted: s.counters.accepted.load(Ordering::Relaxed),
        diverted: s.counters.diverted.load(Ordering::Relaxed),
        records: s.warehouse.len(),
        evaluation: s.evaluation.lock().expect("evaluation lock").clone(),
    };
    Ok(s.reply(StatusCode::OK, view))
}

async fn evaluate(State(s): State<Shared>, body: Bytes) -> ApiResult<EvalReport> {
    let req: EvalRequest = parse_body(&body).map_err(|e| e.at(s.now()))?;
    let invalid = |e: ticketflow_core::metrics::MetricsError| {
        s.fail(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid", e.to_string()))
    };
    let report = EvalReport {
        samples: req.samples.len(),
        p_char: p_char(&req.samples).map_err(invalid)?,
        p_ticket: p_ticket(&req.samples).map_err(invalid)?,
    };
    *s.evaluation.lock().expect("evaluation lock") = Some(report.clone());
    Ok(s.reply(StatusCode::OK, report))
}

async fn categories(State(s): State<Shared>) -> ApiResult<BTreeMap<String, CategoryInfo>> {
    let list = s
        .pipeline
        .category_registry
        .iter()
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    Ok(s.reply(StatusCode::OK, list))
}

async fn not_found(State(s): State<Shared>) -> ApiError {
    s.fail(ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint"))
}
