//! Response envelope and error mapping.

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};
use ticketflow_core::{PipelineError, WarehouseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    /// Location of a schema violation inside the request body.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

/// Every response body. Exactly one of `data` and `error` is present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorBody>,
    pub snapshot_ts: u64,
}

/// A successful reply with its status code.
pub struct Reply<T> {
    pub code: StatusCode,
    pub data: T,
    pub snapshot_ts: u64,
}

impl<T: Serialize> IntoResponse for Reply<T> {
    fn into_response(self) -> Response {
        let body = Envelope {
            status: Status::Ok,
            data: Some(self.data),
            error: None,
            snapshot_ts: self.snapshot_ts,
        };
        (self.code, Json(body)).into_response()
    }
}

#[derive(Debug, Clone)]
pub struct ApiError {
    pub code: StatusCode,
    pub body: ErrorBody,
    pub snapshot_ts: u64,
}

impl ApiError {
    pub fn new(code: StatusCode, kind: &str, message: impl Into<String>) -> Self {
        Self {
            code,
            body: ErrorBody {
                code: kind.to_string(),
                message: message.into(),
                path: None,
            },
            snapshot_ts: 0,
        }
    }

    pub fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        let path = path.into();
        let mut e = Self::new(StatusCode::UNPROCESSABLE_ENTITY, "schema", format!("{path}: {}", message.into()));
        e.body.path = Some(path);
        e
    }

    pub fn at(mut self, ts: u64) -> Self {
        self.snapshot_ts = ts;
        self
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body: Envelope<()> = Envelope {
            status: Status::Error,
            data: None,
            error: Some(self.body),
            snapshot_ts: self.snapshot_ts,
        };
        (self.code, Json(body)).into_response()
    }
}

impl From<WarehouseError> for ApiError {
    fn from(e: WarehouseError) -> Self {
        let msg = e.to_string();
        match e {
            WarehouseError::UnknownRecord(_) => Self::new(StatusCode::NOT_FOUND, "not_found", msg),
            WarehouseError::StaleVersion { .. } => Self::new(StatusCode::CONFLICT, "stale_version", msg),
            WarehouseError::DuplicateId(_) => Self::new(StatusCode::CONFLICT, "duplicate_id", msg),
            WarehouseError::LevelRegression { .. } => Self::new(StatusCode::CONFLICT, "level_regression", msg),
            WarehouseError::InvalidDecision(_) | WarehouseError::EmptyId | WarehouseError::MissingTC => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid", msg)
            }
            WarehouseError::InvalidCursor => Self::new(StatusCode::BAD_REQUEST, "bad_cursor", msg),
            WarehouseError::StoreUnavailable(_) | WarehouseError::Corrupt { .. } => {
                Self::new(StatusCode::SERVICE_UNAVAILABLE, "store_unavailable", msg)
            }
        }
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::InvalidInput(m) => {
                let path = m.split_once(':').map_or(".", |(p, _)| p).to_string();
                let mut err = Self::new(StatusCode::UNPROCESSABLE_ENTITY, "schema", m);
                err.body.path = Some(path);
                err
            }
            PipelineError::Warehouse(w) => w.into(),
            other => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "pipeline", other.to_string()),
        }
    }
}
