//! Type-routed recognition over pluggable backends.
//!
//! Type I tickets go through keyword-field detection only. Type II adds
//! segment-and-classify recognition for the one large-vocabulary name field.
//! Type III runs full-surface line detection, character segmentation and
//! character classification; its output is structured afterwards.

mod backends;
mod fixture;
mod noise;

pub use backends::{BackendConfig, BackendSet, EntryBackend, RotationBackend};
pub use fixture::{FixtureCharClassifier, FixtureCharSegmenter, FixtureKeywordDetector, FixtureLineDetector};
pub use noise::{apply_noise, confusables, NoiseModel, CONFIDENCE_PENALTY};

use crate::config::CategoryInfo;
use crate::geometry::BBox;
use crate::preprocess::RawTicketImage;
use crate::structure::reading_order;
use crate::types::{flags, RegionKind, TextRegion};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// Label the keyword-field detector uses for the ticket title; never a field.
pub const TITLE_LABEL: &str = "title";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    #[error("backend failure: {0}")]
    Failure(String),
}

/// One labelled information region found by the keyword-field detector.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldDetection {
    pub label: String,
    pub value: String,
    pub bbox: BBox,
    pub confidence: f64,
}

pub trait KeywordFieldDetector: Send + Sync {
    fn detect(&self, ticket: &RawTicketImage, category: &CategoryInfo) -> Result<Vec<FieldDetection>, BackendError>;
}

pub trait TextLineDetector: Send + Sync {
    fn detect(&self, ticket: &RawTicketImage) -> Result<Vec<BBox>, BackendError>;
}

pub trait CharSegmenter: Send + Sync {
    /// Character boxes of one line, left to right.
    fn segment(&self, ticket: &RawTicketImage, line: &BBox) -> Result<Vec<BBox>, BackendError>;
}

pub trait CharClassifier: Send + Sync {
    fn recognize(&self, ticket: &RawTicketImage, char_box: &BBox) -> Result<(char, f64), BackendError>;
}

/// Fields recovered by the type I / type II paths.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FieldRecognition {
    pub fields: BTreeMap<String, String>,
    pub field_boxes: BTreeMap<String, BBox>,
    pub field_confidence: BTreeMap<String, f64>,
    /// Every detection, the title included, as keyword-field regions.
    pub regions: Vec<TextRegion>,
    pub flags: BTreeSet<String>,
}

impl FieldRecognition {
    /// Minimum field confidence; zero when nothing was recognised.
    pub fn confidence(&self) -> f64 {
        if self.fields.is_empty() {
            return 0.0;
        }
        self.field_confidence.values().copied().fold(1.0, f64::min)
    }

    fn insert(&mut self, label: &str, value: String, bbox: BBox, confidence: f64, tau_recog: f64) {
        if confidence < tau_recog {
            self.flags.insert(flags::low_confidence(label));
        }
        self.fields.insert(label.to_string(), value);
        self.field_boxes.insert(label.to_string(), bbox);
        self.field_confidence.insert(label.to_string(), confidence);
    }
}

fn detection_region(d: &FieldDetection) -> TextRegion {
    TextRegion::new(d.bbox, d.value.clone(), d.confidence, RegionKind::KeywordField).with_field(d.label.clone())
}

/// Fields straight from the keyword-field detector; no structuring pass.
/// When a label is detected twice the more confident detection wins.
pub fn recognize_type1(
    ticket: &RawTicketImage,
    category: &CategoryInfo,
    detector: &dyn KeywordFieldDetector,
    tau_recog: f64,
) -> Result<FieldRecognition, BackendError> {
    let mut detections = detector.detect(ticket, category)?;
    detections.sort_by(|a, b| b.confidence.total_cmp(&a.confidence));
    let mut out = FieldRecognition::default();
    let mut seen = BTreeSet::new();
    for d in &detections {
        if !seen.insert(d.label.clone()) {
            continue;
        }
        out.regions.push(detection_region(d));
        if d.label != TITLE_LABEL && category.field_keywords.contains(&d.label) {
            out.insert(&d.label, d.value.clone(), d.bbox, d.confidence, tau_recog);
        }
    }
    out.regions.sort_by(|a, b| reading_order(&a.bbox, &b.bbox));
    Ok(out)
}

/// Recognise one line by segmenting it into characters and classifying each.
/// A line without characters yields empty text with confidence 0.
pub fn recognize_line(
    ticket: &RawTicketImage,
    line: &BBox,
    seg: &dyn CharSegmenter,
    chars: &dyn CharClassifier,
) -> Result<TextRegion, BackendError> {
    let boxes = seg.segment(ticket, line)?;
    let mut text = String::new();
    let mut conf = if boxes.is_empty() { 0.0 } else { 1.0f64 };
    for b in &boxes {
        let (c, p) = chars.recognize(ticket, b)?;
        text.push(c);
        conf = conf.min(p);
    }
    Ok(TextRegion::new(*line, text, conf, RegionKind::FreeText))
}

/// Full-surface recognition: one region per detected line.
pub fn recognize_type3(
    ticket: &RawTicketImage,
    lines: &dyn TextLineDetector,
    seg: &dyn CharSegmenter,
    chars: &dyn CharClassifier,
) -> Result<Vec<TextRegion>, BackendError> {
    lines
        .detect(ticket)?
        .iter()
        .map(|l| recognize_line(ticket, l, seg, chars))
        .collect()
}

/// Type I path for ordinary fields, segment-and-classify for the name field
/// inside the box the detector reports for it.
pub fn recognize_type2(
    ticket: &RawTicketImage,
    category: &CategoryInfo,
    detector: &dyn KeywordFieldDetector,
    lines: &dyn TextLineDetector,
    seg: &dyn CharSegmenter,
    chars: &dyn CharClassifier,
    tau_recog: f64,
) -> Result<FieldRecognition, BackendError> {
    let name_field = category.name_field.clone().unwrap_or_default();
    let mut out = recognize_type1(ticket, category, detector, tau_recog)?;
    let name_box = out.field_boxes.get(&name_field).copied();
    out.fields.remove(&name_field);
    out.field_boxes.remove(&name_field);
    out.field_confidence.remove(&name_field);
    out.flags.remove(&flags::low_confidence(&name_field));
    let Some(name_box) = name_box else {
        out.flags.insert(flags::MISSING_NAME_REGION.to_string());
        return Ok(out);
    };
    let mut inside: Vec<BBox> = lines
        .detect(ticket)?
        .into_iter()
        .filter(|l| {
            let (cx, cy) = l.center();
            name_box.contains_point(cx, cy)
        })
        .collect();
    if inside.is_empty() {
        inside.push(name_box);
    }
    inside.sort_by(reading_order);
    let mut text = String::new();
    let mut conf = 1.0f64;
    for l in &inside {
        let r = recognize_line(ticket, l, seg, chars)?;
        text.push_str(&r.text);
        conf = conf.min(r.confidence);
    }
    for r in out.regions.iter_mut() {
        if r.field.as_deref() == Some(name_field.as_str()) {
            r.text = text.clone();
            r.confidence = conf;
        }
    }
    out.insert(&name_field, text, name_box, conf, tau_recog);
    Ok(out)
}
