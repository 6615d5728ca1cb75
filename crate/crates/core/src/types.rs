//! Shared domain types for the forward branch.

use crate::geometry::BBox;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Routing taxonomy for recognition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TicketType {
    /// Fixed form, small vocabulary: keyword-field detection only.
    I,
    /// Fixed form with one large-vocabulary name field.
    II,
    /// Non-fixed form: full-surface recognition followed by structuring.
    III,
}

impl fmt::Display for TicketType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TicketType::I => "I",
            TicketType::II => "II",
            TicketType::III => "III",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RegionKind {
    KeywordField,
    #[default]
    FreeText,
    ValueFragment,
}

/// Positioned text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextRegion {
    pub bbox: BBox,
    #[serde(default)]
    pub text: String,
    #[serde(rename = "conf", default = "one")]
    pub confidence: f64,
    #[serde(default)]
    pub kind: RegionKind,
    /// Information-field label carried by fixture ground truth and by
    /// keyword-field detections.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
}

fn one() -> f64 {
    1.0
}

impl TextRegion {
    pub fn new(bbox: BBox, text: impl Into<String>, confidence: f64, kind: RegionKind) -> Self {
        Self {
            bbox,
            text: text.into(),
            confidence,
            kind,
            field: None,
        }
    }

    pub fn with_field(mut self, field: impl Into<String>) -> Self {
        self.field = Some(field.into());
        self
    }
}

/// Pipeline stages in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Rotation,
    Classification,
    Recognition,
    Structuring,
    Entry,
}

impl Stage {
    pub const ALL: [Stage; 5] = [
        Stage::Rotation,
        Stage::Classification,
        Stage::Recognition,
        Stage::Structuring,
        Stage::Entry,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Stage::Rotation => "rotation",
            Stage::Classification => "classification",
            Stage::Recognition => "recognition",
            Stage::Structuring => "structuring",
            Stage::Entry => "entry",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum AuditState {
    #[default]
    None,
    Pending,
    Confirmed,
    Overturned,
}

impl AuditState {
    pub fn as_str(&self) -> &'static str {
        match self {
            AuditState::None => "none",
            AuditState::Pending => "pending",
            AuditState::Confirmed => "confirmed",
            AuditState::Overturned => "overturned",
        }
    }
}

/// Record flags written by the forward branch.
pub mod flags {
    pub const UNFAMILIAR: &str = "unfamiliar";
    pub const KEYWORD_MISMATCH: &str = "keyword-mismatch";
    pub const KEYWORD_INCONCLUSIVE: &str = "keyword-inconclusive";
    pub const MISSING_NAME_REGION: &str = "missing-name-region";
    pub const ROTATION_AMBIGUOUS: &str = "rotation-ambiguous";

    pub fn low_confidence(field: &str) -> String {
        format!("low-confidence:{field}")
    }

    pub fn unresolved(field: &str) -> String {
        format!("unresolved:{field}")
    }
}

/// The unit of work flowing through the forward branch and into the warehouse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TicketRecord {
    pub id: String,
    pub width_px: u32,
    pub height_px: u32,
    pub rotation_class: u32,
    /// `None` only for audit-pending placeholders diverted before classification.
    pub category: Option<String>,
    pub ticket_type: Option<TicketType>,
    pub regions: Vec<TextRegion>,
    pub fields: BTreeMap<String, String>,
    pub field_boxes: BTreeMap<String, BBox>,
    pub entry_subject: Option<String>,
    pub stage_confidences: BTreeMap<Stage, f64>,
    pub info_level: u8,
    pub audit_state: AuditState,
    #[serde(default)]
    pub flags: BTreeSet<String>,
}

impl TicketRecord {
    pub fn new(id: impl Into<String>, width_px: u32, height_px: u32) -> Self {
        Self {
            id: id.into(),
            width_px,
            height_px,
            rotation_class: 0,
            category: None,
            ticket_type: None,
            regions: Vec::new(),
            fields: BTreeMap::new(),
            field_boxes: BTreeMap::new(),
            entry_subject: None,
            stage_confidences: BTreeMap::new(),
            info_level: 4,
            audit_state: AuditState::None,
            flags: BTreeSet::new(),
        }
    }

    pub fn has_flag(&self, flag: &str) -> bool {
        self.flags.contains(flag)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeStatus {
    Accepted,
    NeedsAudit,
}

/// Result of pushing one ticket through the forward branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessOutcome {
    pub status: OutcomeStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub divert_stage: Option<Stage>,
    pub record: TicketRecord,
}

impl ProcessOutcome {
    pub fn accepted(record: TicketRecord) -> Self {
        Self {
            status: OutcomeStatus::Accepted,
            divert_stage: None,
            record,
        }
    }

    pub fn diverted(stage: Stage, record: TicketRecord) -> Self {
        Self {
            status: OutcomeStatus::NeedsAudit,
            divert_stage: Some(stage),
            record,
        }
    }
}
