//! On-disk layout: one JSON object per line, one line per stored version,
//! plus a snapshot of the latest state every few hundred appends.

use super::{DecisionRecord, Provenance, WarehouseRecord};
use crate::geometry::BBox;
use crate::types::{AuditState, Stage, TextRegion, TicketRecord, TicketType};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

pub const SCHEMA_VERSION: u32 = 1;
pub const LOG_FILE: &str = "warehouse.log";
pub const SNAPSHOT_FILE: &str = "snapshot.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditBlock {
    pub state: AuditState,
    #[serde(default)]
    pub history: Vec<DecisionRecord>,
}

/// One version of one record as written to the log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogLine {
    pub schema: u32,
    pub id: String,
    pub version: u64,
    pub ts: u64,
    pub first_ts: u64,
    pub category: Option<String>,
    #[serde(rename = "type")]
    pub ticket_type: Option<TicketType>,
    pub level: u8,
    pub conf: BTreeMap<Stage, f64>,
    pub fields: BTreeMap<String, String>,
    #[serde(default)]
    pub field_boxes: BTreeMap<String, BBox>,
    pub regions: Vec<TextRegion>,
    pub entry: Option<String>,
    pub audit: AuditBlock,
    pub provenance: Provenance,
    pub width_px: u32,
    pub height_px: u32,
    #[serde(default)]
    pub rotation_class: u32,
    #[serde(default)]
    pub flags: BTreeSet<String>,
}

impl From<&WarehouseRecord> for LogLine {
    fn from(w: &WarehouseRecord) -> Self {
        let r = &w.record;
        LogLine {
            schema: SCHEMA_VERSION,
            id: r.id.clone(),
            version: w.version,
            ts: w.ts,
            first_ts: w.first_ts,
            category: r.category.clone(),
            ticket_type: r.ticket_type,
            level: r.info_level,
            conf: r.stage_confidences.clone(),
            fields: r.fields.clone(),
            field_boxes: r.field_boxes.clone(),
            regions: r.regions.clone(),
            entry: r.entry_subject.clone(),
            audit: AuditBlock {
                state: r.audit_state,
                history: w.audit_history.clone(),
            },
            provenance: w.provenance,
            width_px: r.width_px,
            height_px: r.height_px,
            rotation_class: r.rotation_class,
            flags: r.flags.clone(),
        }
    }
}

impl From<LogLine> for WarehouseRecord {
    fn from(l: LogLine) -> Self {
        WarehouseRecord {
            record: TicketRecord {
                id: l.id,
                width_px: l.width_px,
                height_px: l.height_px,
                rotation_class: l.rotation_class,
                category: l.category,
                ticket_type: l.ticket_type,
                regions: l.regions,
                fields: l.fields,
                field_boxes: l.field_boxes,
                entry_subject: l.entry,
                stage_confidences: l.conf,
                info_level: l.level,
                audit_state: l.audit.state,
                flags: l.flags,
            },
            version: l.version,
            ts: l.ts,
            first_ts: l.first_ts,
            provenance: l.provenance,
            audit_history: l.audit.history,
        }
    }
}

/// Every stored version up to `log_len` bytes of the log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotFile {
    pub schema: u32,
    pub log_len: u64,
    pub records: Vec<LogLine>,
}

/// Parse complete lines of `bytes`; a trailing fragment without a newline is
/// an interrupted append and is ignored. Returns the parsed lines and the
/// byte length of the complete prefix.
pub(crate) fn parse_log(bytes: &[u8], first_line_no: usize) -> Result<(Vec<LogLine>, usize), super::WarehouseError> {
    let complete = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1);
    let mut out = Vec::new();
    for (i, raw) in bytes[..complete].split(|&b| b == b'\n').enumerate() {
        if raw.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        let line: LogLine = serde_json::from_slice(raw).map_err(|e| super::WarehouseError::Corrupt {
            line: first_line_no + i + 1,
            message: e.to_string(),
        })?;
        if line.schema != SCHEMA_VERSION {
            return Err(super::WarehouseError::Corrupt {
                line: first_line_no + i + 1,
                message: format!("unsupported schema {}", line.schema),
            });
        }
        out.push(line);
    }
    Ok((out, complete))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(id: &str) -> LogLine {
        let w = WarehouseRecord {
            record: TicketRecord::new(id, 5, 5),
            version: 1,
            ts: 7,
            first_ts: 7,
            provenance: Provenance::Fixture,
            audit_history: vec![],
        };
        LogLine::from(&w)
    }

    #[test]
    fn round_trip_through_json() {
        let l = line("a");
        let text = serde_json::to_string(&l).unwrap();
        assert!(text.contains("\"type\":null"));
        let back: LogLine = serde_json::from_str(&text).unwrap();
        assert_eq!(back, l);
        let w: WarehouseRecord = back.into();
        assert_eq!(LogLine::from(&w), l);
    }

    #[test]
    fn trailing_fragment_ignored() {
        let mut bytes = serde_json::to_vec(&line("a")).unwrap();
        bytes.push(b'\n');
        let full = bytes.len();
        bytes.extend_from_slice(b"{\"schema\":1,\"id\":");
        let (lines, len) = parse_log(&bytes, 0).unwrap();
        assert_eq!(lines.len(), 1);
        assert_eq!(len, full);
    }

    #[test]
    fn garbage_line_reports_position() {
        let err = parse_log(b"not json\n", 0).unwrap_err();
        assert!(matches!(err, crate::warehouse::WarehouseError::Corrupt { line: 1, .. }));
    }
}
