//! Randomized ingest/audit traffic for the warehouse and independent checks
//! of what the store must hold afterwards.

#![allow(dead_code)]

use rand::seq::IndexedRandom;
use rand::Rng;
use std::collections::{BTreeMap, BTreeSet};
use ticketflow_core::warehouse::{AuditDecision, PushSets, Supplied, Verdict, WarehouseError};
use ticketflow_core::{AuditState, BBox, CategoryRegistry, Stage, TicketRecord, Warehouse, WarehouseRecord};

pub const KNOWN: [&str; 6] = [
    "VAT ticket", "quota ticket", "taxi ticket", "train ticket", "bank receipt", "toll ticket",
];

#[derive(Debug, Default, Clone, Copy)]
pub struct OpCounts {
    pub ingested: usize,
    pub reingested: usize,
    pub audited: usize,
    pub rejected: usize,
}

/// Level from the information a record carries, written out from the level
/// table: entry + boxes + contents = 1, boxes + contents = 2, contents = 3,
/// anything less (or no category) = 4.
pub fn expected_level(r: &TicketRecord) -> u8 {
    if r.category.is_none() || r.fields.is_empty() {
        return 4;
    }
    match (!r.field_boxes.is_empty(), r.entry_subject.is_some()) {
        (true, true) => 1,
        (true, false) => 2,
        (false, _) => 3,
    }
}

fn some_fields(rng: &mut impl Rng) -> BTreeMap<String, String> {
    let n = rng.random_range(1..=3);
    (0..n)
        .map(|i| (format!("field{i}"), format!("{}", rng.random_range(0..100_000))))
        .collect()
}

fn some_boxes(rng: &mut impl Rng) -> BTreeMap<String, BBox> {
    let n = rng.random_range(1..=3);
    (0..n)
        .map(|i| {
            let b = BBox::new(
                rng.random_range(0..500) as f64,
                rng.random_range(0..500) as f64,
                rng.random_range(5..80) as f64,
                rng.random_range(5..30) as f64,
            );
            (format!("field{i}"), b)
        })
        .collect()
}

pub fn random_record(rng: &mut impl Rng, id: &str) -> TicketRecord {
    let mut r = TicketRecord::new(id, rng.random_range(300..2000), rng.random_range(300..2000));
    if rng.random_bool(0.9) {
        r.category = Some(KNOWN.choose(rng).unwrap().to_string());
        r.stage_confidences
            .insert(Stage::Classification, rng.random_range(0.3..1.0));
        if rng.random_bool(0.7) {
            r.fields = some_fields(rng);
        }
        if rng.random_bool(0.5) {
            r.field_boxes = some_boxes(rng);
        }
        if rng.random_bool(0.4) {
            r.entry_subject = Some("office expenses".into());
        }
    }
    r.audit_state = if rng.random_bool(0.5) {
        AuditState::Pending
    } else {
        AuditState::None
    };
    r
}

/// A richer copy: adds one missing tier of information if any is missing.
fn enrich(rng: &mut impl Rng, mut r: TicketRecord) -> TicketRecord {
    if r.category.is_none() {
        r.category = Some(KNOWN.choose(rng).unwrap().to_string());
    } else if r.fields.is_empty() {
        r.fields = some_fields(rng);
    } else if r.field_boxes.is_empty() {
        r.field_boxes = some_boxes(rng);
    } else if r.entry_subject.is_none() {
        r.entry_subject = Some("travel expenses".into());
    } else {
        r.width_px += 1;
    }
    r
}

pub fn random_decision(rng: &mut impl Rng, version: u64, novel: &mut usize) -> AuditDecision {
    let mut supplied = Supplied::default();
    if rng.random_bool(0.5) {
        supplied.category = Some(if rng.random_bool(0.3) {
            *novel += 1;
            format!("novel category {novel}")
        } else {
            KNOWN.choose(rng).unwrap().to_string()
        });
    }
    if rng.random_bool(0.3) {
        supplied.fields = Some(some_fields(rng));
    }
    if rng.random_bool(0.3) {
        supplied.field_boxes = Some(some_boxes(rng));
    }
    if rng.random_bool(0.3) {
        supplied.entry = Some("consulting fees".into());
    }
    let verdict = if supplied.is_empty() || rng.random_bool(0.4) {
        Verdict::Confirmed
    } else {
        Verdict::Overturned
    };
    let version = match rng.random_range(0..10) {
        0 => Some(version.saturating_sub(1)),
        1 => None,
        _ => Some(version),
    };
    AuditDecision {
        auditor: "auditor".into(),
        verdict,
        supplied,
        version,
    }
}

/// Drive `ops` random operations. Every refused operation must leave the
/// store untouched; that is checked here as it happens.
pub fn run_ops(wh: &Warehouse, rng: &mut impl Rng, ops: usize) -> OpCounts {
    let mut counts = OpCounts::default();
    let mut ids: Vec<String> = wh.export().into_iter().filter(|w| w.version == 1).map(|w| w.record.id).collect();
    let mut novel = 0;
    for _ in 0..ops {
        let roll = rng.random_range(0..100);
        if ids.is_empty() || roll < 35 {
            let id = format!("t{:05}", ids.len());
            let r = random_record(rng, &id);
            wh.ingest(r, ticketflow_core::warehouse::Provenance::Fixture).unwrap();
            ids.push(id);
            counts.ingested += 1;
        } else if roll < 55 {
            let id = ids.choose(rng).unwrap().clone();
            let before = wh.versions(&id).len();
            let latest = wh.get(&id).unwrap().record;
            let next = if rng.random_bool(0.8) {
                enrich(rng, latest)
            } else {
                random_record(rng, &id)
            };
            match wh.ingest(next, ticketflow_core::warehouse::Provenance::ForwardBranch) {
                Ok(_) => counts.reingested += 1,
                Err(WarehouseError::LevelRegression { .. }) => {
                    assert_eq!(wh.versions(&id).len(), before);
                    counts.rejected += 1;
                }
                Err(e) => panic!("unexpected ingest error: {e}"),
            }
        } else {
            let unknown = rng.random_bool(0.03);
            let id = if unknown {
                "no-such-record".to_string()
            } else {
                ids.choose(rng).unwrap().clone()
            };
            let version = wh.get(&id).map_or(1, |w| w.version);
            let before = wh.versions(&id).len();
            let d = random_decision(rng, version, &mut novel);
            match wh.audit_decide(&id, d) {
                Ok(_) => counts.audited += 1,
                Err(
                    WarehouseError::UnknownRecord(_)
                    | WarehouseError::StaleVersion { .. }
                    | WarehouseError::LevelRegression { .. },
                ) => {
                    assert_eq!(wh.versions(&id).len(), before);
                    counts.rejected += 1;
                }
                Err(e) => panic!("unexpected audit error: {e}"),
            }
        }
    }
    counts
}

/// Push sets recomputed from exported versions: the latest decision on each
/// record decides, with the machine confidence read off the version the
/// decision was applied to and novelty checked against the registry.
pub fn expected_push_sets(
    wh: &Warehouse,
    registry: &CategoryRegistry,
    tau_class: f64,
    scarce_min: usize,
) -> PushSets {
    let export = wh.export();
    let mut latest: BTreeMap<&str, &WarehouseRecord> = BTreeMap::new();
    for w in &export {
        latest.insert(w.record.id.as_str(), w);
    }
    let mut sets = PushSets::default();
    for (id, w) in &latest {
        let Some(d) = w.audit_history.last() else { continue };
        let judged = export
            .iter()
            .find(|v| v.record.id == *id && v.version == d.version)
            .expect("decision refers to a stored version");
        let conf = judged.record.stage_confidences.get(&Stage::Classification).copied();
        let gated = conf.is_some_and(|c| c >= tau_class);
        let novel = d.supplied.category.as_ref().is_some_and(|c| !registry.contains(c));
        if gated && d.verdict == Verdict::Overturned {
            sets.error_prone.push(id.to_string());
        } else if !gated && novel {
            sets.unfamiliar.push(id.to_string());
        }
    }
    let mut per_category: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (id, w) in &latest {
        if let Some(c) = &w.record.category {
            per_category.entry(c.as_str()).or_default().push(id);
        }
    }
    let mut scarce: Vec<String> = per_category
        .values()
        .filter(|ids| ids.len() < scarce_min)
        .flat_map(|ids| ids.iter().map(|s| s.to_string()))
        .collect();
    scarce.sort();
    sets.scarce = scarce;
    sets
}

/// Versions never lose information, stored levels match the level table,
/// and versions are numbered 1.. with strictly increasing times.
pub fn check_versions(wh: &Warehouse) -> Result<(), String> {
    let export = wh.export();
    let mut by_id: BTreeMap<&str, Vec<&WarehouseRecord>> = BTreeMap::new();
    for w in &export {
        by_id.entry(w.record.id.as_str()).or_default().push(w);
    }
    let mut all_ts = BTreeSet::new();
    for (id, versions) in by_id {
        for (i, w) in versions.iter().enumerate() {
            if w.version != i as u64 + 1 {
                return Err(format!("{id}: version {} at position {i}", w.version));
            }
            if w.record.info_level != expected_level(&w.record) {
                return Err(format!("{id} v{}: stored level {}", w.version, w.record.info_level));
            }
            if !all_ts.insert(w.ts) {
                return Err(format!("{id} v{}: timestamp {} reused", w.version, w.ts));
            }
        }
        for pair in versions.windows(2) {
            if pair[1].record.info_level > pair[0].record.info_level {
                return Err(format!("{id}: level rose from {} to {}", pair[0].record.info_level, pair[1].record.info_level));
            }
            if pair[1].ts <= pair[0].ts || pair[1].first_ts != pair[0].first_ts {
                return Err(format!("{id}: times out of order"));
            }
        }
    }
    Ok(())
}
