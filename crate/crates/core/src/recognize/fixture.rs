//! Backends that read answers from fixture ground truth.
//!
//! The pipeline perturbs ground truth with the configured noise model before
//! recognition runs, so these backends report whatever the "observed"
//! ticket carries.

use super::{BackendError, CharClassifier, CharSegmenter, FieldDetection, KeywordFieldDetector, TextLineDetector, TITLE_LABEL};
use crate::config::CategoryInfo;
use crate::geometry::BBox;
use crate::preprocess::RawTicketImage;
use crate::types::{RegionKind, TextRegion};

fn best_overlap<'a>(ticket: &'a RawTicketImage, b: &BBox) -> Option<&'a TextRegion> {
    let mut best: Option<(&TextRegion, f64)> = None;
    for r in ticket.regions() {
        let a = r.bbox.intersection_area(b);
        if a > 0.0 && best.is_none_or(|(_, ba)| a > ba) {
            best = Some((r, a));
        }
    }
    best.map(|(r, _)| r)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FixtureKeywordDetector;

impl KeywordFieldDetector for FixtureKeywordDetector {
    fn detect(&self, ticket: &RawTicketImage, category: &CategoryInfo) -> Result<Vec<FieldDetection>, BackendError> {
        Ok(ticket
            .regions()
            .iter()
            .filter(|r| r.kind == RegionKind::KeywordField)
            .filter_map(|r| {
                let label = r.field.as_ref()?;
                (label == TITLE_LABEL || category.field_keywords.contains(label)).then(|| FieldDetection {
                    label: label.clone(),
                    value: r.text.clone(),
                    bbox: r.bbox,
                    confidence: r.confidence,
                })
            })
            .collect())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FixtureLineDetector;

impl TextLineDetector for FixtureLineDetector {
    fn detect(&self, ticket: &RawTicketImage) -> Result<Vec<BBox>, BackendError> {
        Ok(ticket.regions().iter().map(|r| r.bbox).collect())
    }
}

/// Splits the best-overlapping region into equal-width character cells.
#[derive(Debug, Clone, Copy, Default)]
pub struct FixtureCharSegmenter;

impl CharSegmenter for FixtureCharSegmenter {
    fn segment(&self, ticket: &RawTicketImage, line: &BBox) -> Result<Vec<BBox>, BackendError> {
        let Some(r) = best_overlap(ticket, line) else {
            return Ok(Vec::new());
        };
        let n = r.text.chars().count();
        Ok((0..n).map(|i| r.bbox.char_slice(i, i + 1, n)).collect())
    }
}

/// Returns the character under the cell centre, with its region's confidence.
#[derive(Debug, Clone, Copy, Default)]
pub struct FixtureCharClassifier;

impl CharClassifier for FixtureCharClassifier {
    fn recognize(&self, ticket: &RawTicketImage, char_box: &BBox) -> Result<(char, f64), BackendError> {
        let r = best_overlap(ticket, char_box)
            .ok_or_else(|| BackendError::Failure("character cell outside every text region".into()))?;
        let chars: Vec<char> = r.text.chars().collect();
        if chars.is_empty() {
            return Err(BackendError::Failure("character cell inside an empty region".into()));
        }
        let (cx, _) = char_box.center();
        let i = (((cx - r.bbox.x) / r.bbox.w) * chars.len() as f64).floor();
        let i = (i.max(0.0) as usize).min(chars.len() - 1);
        Ok((chars[i], r.confidence))
    }
}
