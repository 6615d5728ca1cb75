//! The ticket warehouse: append-only versioned records, information levels,
//! the audit queue, training-candidate push sets and periodic statistics.

mod clock;
mod log;
mod store;

pub use clock::{Clock, ManualClock, SystemClock};
pub use log::{LogLine, SnapshotFile, LOG_FILE, SCHEMA_VERSION, SNAPSHOT_FILE};
pub use store::{IngestReceipt, QueuePage, StoreOptions, Warehouse};

use crate::geometry::BBox;
use crate::types::{AuditState, Stage, TicketRecord};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WarehouseError {
    #[error("record has no category")]
    MissingTC,
    #[error("record id is empty")]
    EmptyId,
    #[error("no record with id {0:?}")]
    UnknownRecord(String),
    #[error("record {id:?} is at version {current}, decision references version {given}")]
    StaleVersion { id: String, current: u64, given: u64 },
    #[error("record {0:?} already exists with different content")]
    DuplicateId(String),
    #[error("record {id:?}: information level would regress from {from} to {to}")]
    LevelRegression { id: String, from: u8, to: u8 },
    #[error("invalid audit decision: {0}")]
    InvalidDecision(String),
    #[error("invalid queue cursor")]
    InvalidCursor,
    #[error("store unavailable: {0}")]
    StoreUnavailable(String),
    #[error("log line {line}: {message}")]
    Corrupt { line: usize, message: String },
}

impl From<std::io::Error> for WarehouseError {
    fn from(e: std::io::Error) -> Self {
        WarehouseError::StoreUnavailable(e.to_string())
    }
}

/// Information level from what the record carries:
/// 1 = entry + boxes + contents + category, 2 = boxes + contents + category,
/// 3 = contents + category, 4 = category only.
pub fn compute_level(record: &TicketRecord) -> Result<u8, WarehouseError> {
    if record.category.is_none() {
        return Err(WarehouseError::MissingTC);
    }
    let kc = !record.fields.is_empty();
    let kbb = !record.field_boxes.is_empty();
    let ae = record.entry_subject.is_some();
    Ok(match (kc, kbb, ae) {
        (true, true, true) => 1,
        (true, true, false) => 2,
        (true, false, _) => 3,
        _ => 4,
    })
}

/// Level stored on the record: placeholders without a category sit at 4.
pub fn stored_level(record: &TicketRecord) -> u8 {
    compute_level(record).unwrap_or(4)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ForwardBranch,
    Fixture,
    Manual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Confirmed,
    Overturned,
}

/// Information an auditor provides with a decision.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Supplied {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fields: Option<BTreeMap<String, String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field_boxes: Option<BTreeMap<String, BBox>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entry: Option<String>,
}

impl Supplied {
    pub fn is_empty(&self) -> bool {
        self.category.is_none() && self.fields.is_none() && self.field_boxes.is_none() && self.entry.is_none()
    }

    fn validate(&self) -> Result<(), WarehouseError> {
        let bad = |m: &str| Err(WarehouseError::InvalidDecision(m.to_string()));
        if self.category.as_deref().is_some_and(|c| c.trim().is_empty()) {
            return bad("supplied category is empty");
        }
        if self.fields.as_ref().is_some_and(|f| f.is_empty()) {
            return bad("supplied fields map is empty");
        }
        if self.field_boxes.as_ref().is_some_and(|f| f.is_empty() || f.values().any(|b| !b.is_valid())) {
            return bad("supplied field boxes are empty or degenerate");
        }
        if self.entry.as_deref().is_some_and(|e| e.trim().is_empty()) {
            return bad("supplied entry is empty");
        }
        Ok(())
    }
}

/// An auditor's verdict on the current version of a record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditDecision {
    pub auditor: String,
    pub verdict: Verdict,
    #[serde(default)]
    pub supplied: Supplied,
    /// Version the auditor looked at; omitted means "whatever is current".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<u64>,
}

/// A decision as stored in the record's audit history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub auditor: String,
    pub verdict: Verdict,
    pub supplied: Supplied,
    /// Version the decision was applied to.
    pub version: u64,
    pub ts: u64,
    /// The machine classification confidence at decision time.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub machine_class_conf: Option<f64>,
    /// The supplied category was absent from the registry at decision time.
    pub new_category: bool,
    /// Digest of the registry's category names when the decision was made.
    pub registry_digest: String,
}

/// One stored version.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WarehouseRecord {
    pub record: TicketRecord,
    pub version: u64,
    /// Time this version was appended.
    pub ts: u64,
    /// Time version 1 was appended.
    pub first_ts: u64,
    pub provenance: Provenance,
    pub audit_history: Vec<DecisionRecord>,
}

impl WarehouseRecord {
    pub fn machine_class_conf(&self) -> Option<f64> {
        self.record.stage_confidences.get(&Stage::Classification).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PushSets {
    pub error_prone: Vec<String>,
    pub unfamiliar: Vec<String>,
    pub scarce: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TimeWindow {
    /// Inclusive lower bound on first-ingest time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<u64>,
    /// Exclusive upper bound on first-ingest time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<u64>,
}

impl TimeWindow {
    pub fn all() -> Self {
        Self::default()
    }

    pub fn contains(&self, ts: u64) -> bool {
        self.from.is_none_or(|f| ts >= f) && self.to.is_none_or(|t| ts < t)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PushSetSizes {
    pub error_prone: usize,
    pub unfamiliar: usize,
    pub scarce: usize,
}

/// Decision-support digest attached to the statistics.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StatsSummary {
    pub pending_audit: usize,
    /// Records that passed every gate without a human.
    pub straight_through: usize,
    /// Overturned share of audited records; absent when nothing was audited.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub overturn_rate: Option<f64>,
    pub scarce_categories: Vec<String>,
    /// Category with the most pending audits, a hint for retraining priority.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub busiest_audit_category: Option<String>,
}

/// Key used for records that have no category yet.
pub const UNCLASSIFIED: &str = "(unclassified)";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StatsReport {
    pub window: TimeWindow,
    pub total: usize,
    pub by_category: BTreeMap<String, usize>,
    pub by_level: BTreeMap<u8, usize>,
    pub by_audit_state: BTreeMap<AuditState, usize>,
    pub push_sets: PushSetSizes,
    pub summary: StatsSummary,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec() -> TicketRecord {
        let mut r = TicketRecord::new("a", 10, 10);
        r.category = Some("quota ticket".into());
        r
    }

    #[test]
    fn level_table() {
        let mut r = rec();
        assert_eq!(compute_level(&r).unwrap(), 4);
        r.fields.insert("Amount".into(), "1".into());
        assert_eq!(compute_level(&r).unwrap(), 3);
        r.field_boxes.insert("Amount".into(), BBox::new(0.0, 0.0, 1.0, 1.0));
        assert_eq!(compute_level(&r).unwrap(), 2);
        r.entry_subject = Some("office expenses".into());
        assert_eq!(compute_level(&r).unwrap(), 1);
        r.category = None;
        assert!(matches!(compute_level(&r), Err(WarehouseError::MissingTC)));
    }

    #[test]
    fn supplied_validation() {
        assert!(Supplied::default().is_empty());
        let s = Supplied {
            category: Some(" ".into()),
            ..Default::default()
        };
        assert!(s.validate().is_err());
    }
}
