//! The forward branch: segment, orient, classify, recognise, structure,
//! assign an entry, and hand the record to the warehouse.

use crate::classify::{classify_ticket, cross_validate_keywords, route_ticket_type, ClassifyDecision, KeywordCheck};
use crate::config::PipelineConfig;
use crate::entry::classify_entry;
use crate::preprocess::{correct_direction, detect_rotation, segment_regions, PreprocessError, RawTicketImage};
use crate::recognize::{
    apply_noise, recognize_type1, recognize_type2, recognize_type3, BackendError, BackendSet, FieldRecognition,
};
use crate::structure::{structure_fields, StructureInput};
use crate::types::{flags, AuditState, ProcessOutcome, Stage, TextRegion, TicketRecord, TicketType};
use crate::warehouse::{stored_level, IngestReceipt, Provenance, Warehouse, WarehouseError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid ticket: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error("backend failure: {0}")]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Warehouse(#[from] WarehouseError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ProcessOptions {
    /// Send every ticket through full-surface recognition and structuring,
    /// whatever its type.
    pub force_full_surface: bool,
}

/// Process every ticket found in `raw`. Images holding several tickets
/// yield one outcome per ticket, with ids suffixed `-1`, `-2`, ...
pub fn process_ticket(
    raw: &RawTicketImage,
    cfg: &PipelineConfig,
    backends: &BackendSet,
) -> Result<Vec<ProcessOutcome>, PipelineError> {
    process_ticket_with(raw, cfg, backends, ProcessOptions::default())
}

pub fn process_ticket_with(
    raw: &RawTicketImage,
    cfg: &PipelineConfig,
    backends: &BackendSet,
    opts: ProcessOptions,
) -> Result<Vec<ProcessOutcome>, PipelineError> {
    raw.validate().map_err(PipelineError::InvalidInput)?;
    let crops = segment_regions(raw)?;
    let base = raw.resolved_id();
    let many = crops.len() > 1;
    crops
        .iter()
        .enumerate()
        .map(|(i, crop)| {
            let id = if many { format!("{base}-{}", i + 1) } else { base.clone() };
            process_one(id, crop, cfg, backends, opts)
        })
        .collect()
}

/// Process and store each resulting record exactly once.
pub fn process_and_ingest(
    raw: &RawTicketImage,
    cfg: &PipelineConfig,
    backends: &BackendSet,
    warehouse: &Warehouse,
) -> Result<Vec<(ProcessOutcome, IngestReceipt)>, PipelineError> {
    let outcomes = process_ticket(raw, cfg, backends)?;
    outcomes
        .into_iter()
        .map(|o| {
            let receipt = warehouse.submit(o.record.clone(), Provenance::ForwardBranch)?;
            Ok((o, receipt))
        })
        .collect()
}

fn finish(mut record: TicketRecord, divert: Option<Stage>) -> ProcessOutcome {
    record.info_level = stored_level(&record);
    match divert {
        Some(stage) => {
            record.audit_state = AuditState::Pending;
            ProcessOutcome::diverted(stage, record)
        }
        None => {
            record.audit_state = AuditState::None;
            ProcessOutcome::accepted(record)
        }
    }
}

fn min_confidence(regions: &[TextRegion]) -> f64 {
    if regions.is_empty() {
        return 0.0;
    }
    regions.iter().map(|r| r.confidence).fold(1.0, f64::min)
}

/// Full-surface path: every line recognised, then structured against the
/// category's keywords. Returns the recognition and structuring confidences.
fn full_surface(
    observed: &RawTicketImage,
    keywords: &[String],
    backends: &BackendSet,
    record: &mut TicketRecord,
) -> Result<(f64, f64), PipelineError> {
    let lines = recognize_type3(
        observed,
        backends.line_detector.as_ref(),
        backends.segmenter.as_ref(),
        backends.char_classifier.as_ref(),
    )?;
    let recog = min_confidence(&lines);
    let res = structure_fields(&StructureInput {
        input_list: lines.clone(),
        keyword_list: keywords.to_vec(),
        ticket_type: TicketType::III,
    });
    record.regions = lines;
    for (k, v) in &res.result_map {
        record.fields.insert(k.clone(), v.value.clone());
        record.field_boxes.insert(k.clone(), v.bbox);
    }
    for k in &res.unresolved {
        record.flags.insert(flags::unresolved(k));
    }
    let resolved = res.result_map.len();
    let total = resolved + res.unresolved.len();
    let structuring = if total == 0 { 0.0 } else { resolved as f64 / total as f64 };
    Ok((recog, structuring))
}

fn apply_fields(record: &mut TicketRecord, fr: FieldRecognition) {
    record.regions = fr.regions;
    record.fields = fr.fields;
    record.field_boxes = fr.field_boxes;
    record.flags.extend(fr.flags);
}

fn process_one(
    id: String,
    crop: &RawTicketImage,
    cfg: &PipelineConfig,
    backends: &BackendSet,
    opts: ProcessOptions,
) -> Result<ProcessOutcome, PipelineError> {
    let mut record = TicketRecord::new(id.clone(), crop.width_px, crop.height_px);

    // orientation
    let est = detect_rotation(crop, backends.rotation.as_ref(), cfg.n_class)?;
    record.rotation_class = est.class_k;
    record.stage_confidences.insert(Stage::Rotation, est.confidence);
    if est.confidence < cfg.threshold(Stage::Rotation) {
        record.flags.insert(flags::ROTATION_AMBIGUOUS.to_string());
        return Ok(finish(record, Some(Stage::Rotation)));
    }
    let mut observed = if est.class_k == 0 {
        crop.clone()
    } else {
        correct_direction(crop, est, cfg.n_class)
    };
    record.width_px = observed.width_px;
    record.height_px = observed.height_px;
    if let Some(gt) = observed.ground_truth.as_mut() {
        let bounds = (observed.width_px as f64, observed.height_px as f64);
        gt.regions = apply_noise(&cfg.noise, &gt.regions, &id, bounds);
    }

    // classification
    let prediction = backends.classifier.predict(&observed)?;
    record.stage_confidences.insert(Stage::Classification, prediction.confidence);
    record.category = Some(prediction.category.clone());
    let category = match classify_ticket(prediction, cfg) {
        ClassifyDecision::Accepted(p) => p.category,
        ClassifyDecision::NeedsAudit { unfamiliar, .. } => {
            if unfamiliar {
                record.flags.insert(flags::UNFAMILIAR.to_string());
            }
            return Ok(finish(record, Some(Stage::Classification)));
        }
    };
    let ticket_type = route_ticket_type(&category, cfg).expect("accepted categories are registered");
    let info = cfg.category_registry.get(&category).expect("registered").clone();
    record.ticket_type = Some(ticket_type);

    // recognition, and structuring where the route needs it
    let mut structuring = None;
    let recog = if opts.force_full_surface || ticket_type == TicketType::III {
        let (r, s) = full_surface(&observed, &info.field_keywords, backends, &mut record)?;
        structuring = Some(s);
        r
    } else {
        let fr = if ticket_type == TicketType::I {
            recognize_type1(&observed, &info, backends.keyword_detector.as_ref(), cfg.tau_recog)?
        } else {
            recognize_type2(
                &observed,
                &info,
                backends.keyword_detector.as_ref(),
                backends.line_detector.as_ref(),
                backends.segmenter.as_ref(),
                backends.char_classifier.as_ref(),
                cfg.tau_recog,
            )?
        };
        let c = fr.confidence();
        apply_fields(&mut record, fr);
        c
    };

    // the recognised title must not name another category
    match cross_validate_keywords(&category, &record.regions, cfg) {
        KeywordCheck::Consistent => {}
        KeywordCheck::Inconclusive => {
            record.flags.insert(flags::KEYWORD_INCONCLUSIVE.to_string());
        }
        KeywordCheck::Mismatch { .. } => {
            record.flags.insert(flags::KEYWORD_MISMATCH.to_string());
            return Ok(finish(record, Some(Stage::Classification)));
        }
    }

    record.stage_confidences.insert(Stage::Recognition, recog);
    if recog < cfg.threshold(Stage::Recognition) {
        return Ok(finish(record, Some(Stage::Recognition)));
    }
    if let Some(s) = structuring {
        record.stage_confidences.insert(Stage::Structuring, s);
        if s < cfg.threshold(Stage::Structuring) {
            return Ok(finish(record, Some(Stage::Structuring)));
        }
    }

    // accounting entry
    let decision = classify_entry(
        &record.fields,
        &category,
        backends.entry_classifier.as_deref(),
        &cfg.entry,
        cfg.tau_entry,
    )?;
    record.stage_confidences.insert(Stage::Entry, decision.confidence);
    if decision.needs_audit {
        return Ok(finish(record, Some(Stage::Entry)));
    }
    record.entry_subject = Some(decision.subject);
    Ok(finish(record, None))
}
