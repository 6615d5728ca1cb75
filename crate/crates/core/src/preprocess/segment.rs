//! Splitting a multi-ticket image into one crop per detected ticket area.

use super::image::{RawTicketImage, ScoredBox};
use super::raster::EdgeRaster;
use super::PreprocessError;
use crate::geometry::BBox;

/// Detector boxes overlapping more than this (intersection over smaller area)
/// are treated as the same ticket.
pub const DEDUP_OVERLAP: f64 = 0.9;

/// Keep boxes in descending score order, dropping any that overlap a kept box.
pub fn dedup_boxes(boxes: &[ScoredBox]) -> Vec<ScoredBox> {
    let mut sorted: Vec<(usize, ScoredBox)> = boxes.iter().copied().enumerate().collect();
    sorted.sort_by(|a, b| b.1.score.total_cmp(&a.1.score).then(a.0.cmp(&b.0)));
    let mut kept: Vec<(usize, ScoredBox)> = Vec::new();
    for (i, b) in sorted {
        if kept.iter().all(|(_, k)| k.bbox.overlap_ratio(&b.bbox) <= DEDUP_OVERLAP) {
            kept.push((i, b));
        }
    }
    // crops come out in detector order
    kept.sort_by_key(|(i, _)| *i);
    kept.into_iter().map(|(_, b)| b).collect()
}

/// One image per kept ticket box, each re-based so the box origin is `(0, 0)`.
pub fn segment_regions(raw: &RawTicketImage) -> Result<Vec<RawTicketImage>, PreprocessError> {
    if raw.ticket_boxes.is_empty() {
        return Err(PreprocessError::NoTicketRegion);
    }
    let full = BBox::new(0.0, 0.0, raw.width_px as f64, raw.height_px as f64);
    Ok(dedup_boxes(&raw.ticket_boxes)
        .into_iter()
        .map(|b| {
            if b.bbox == full {
                let mut same = raw.clone();
                same.ticket_boxes = vec![b];
                same
            } else {
                crop(raw, b)
            }
        })
        .collect())
}

fn crop(raw: &RawTicketImage, b: ScoredBox) -> RawTicketImage {
    let area = b.bbox.clamp_to(raw.width_px as f64, raw.height_px as f64);
    let (w, h) = (area.w.round().max(1.0) as u32, area.h.round().max(1.0) as u32);
    let (ox, oy) = (area.x, area.y);
    let mut out = RawTicketImage::new(w, h);
    out.id = raw.id.clone();
    out.ticket_boxes = vec![ScoredBox::new(0.0, 0.0, w as f64, h as f64, b.score)];
    out.edge_raster = raw.edge_raster.as_ref().map(|r| {
        let (x0, y0) = (ox.floor() as i64, oy.floor() as i64);
        EdgeRaster::from_pixels(
            w,
            h,
            r.iter_set().filter_map(|(x, y)| {
                let (cx, cy) = (x as i64 - x0, y as i64 - y0);
                (cx >= 0 && cy >= 0 && cx < w as i64 && cy < h as i64).then_some((cx as u32, cy as u32))
            }),
        )
    });
    out.ground_truth = raw.ground_truth.as_ref().map(|gt| {
        let mut g = gt.clone();
        g.regions = gt
            .regions
            .iter()
            .filter(|r| {
                let (cx, cy) = r.bbox.center();
                area.contains_point(cx, cy)
            })
            .map(|r| {
                let mut r = r.clone();
                r.bbox = r.bbox.translate(-ox, -oy).clamp_to(w as f64, h as f64);
                r
            })
            .collect();
        g
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_disjoint_boxes_give_two_crops() {
        let mut img = RawTicketImage::new(100, 110);
        img.ticket_boxes = vec![
            ScoredBox::new(0.0, 0.0, 100.0, 50.0, 0.9),
            ScoredBox::new(0.0, 60.0, 100.0, 50.0, 0.8),
        ];
        let crops = segment_regions(&img).unwrap();
        assert_eq!(crops.len(), 2);
        assert!(crops.iter().all(|c| (c.width_px, c.height_px) == (100, 50)));
    }

    #[test]
    fn full_frame_box_is_identity() {
        let img = RawTicketImage::new(80, 40).with_full_frame_box();
        assert_eq!(segment_regions(&img).unwrap(), vec![img]);
    }

    #[test]
    fn overlapping_boxes_keep_higher_score() {
        let a = ScoredBox::new(0.0, 0.0, 100.0, 50.0, 0.9);
        let b = ScoredBox::new(2.0, 1.0, 100.0, 50.0, 0.8);
        // direct intersection: 98 x 49 over the smaller area 5000
        let ratio = (98.0 * 49.0) / 5000.0;
        assert!(ratio > DEDUP_OVERLAP);
        assert_eq!(dedup_boxes(&[b, a]), vec![a]);
    }

    #[test]
    fn no_boxes_is_an_error() {
        let img = RawTicketImage::new(10, 10);
        assert!(matches!(segment_regions(&img), Err(PreprocessError::NoTicketRegion)));
    }
}
