//! Clockwise rotation of ticket images and direction correction.

use super::image::{Frame, RawTicketImage, ScoredBox};
use super::raster::EdgeRaster;
use super::PreprocessError;
use crate::geometry::{cos_sin_deg, rotate_cw, BBox};
use serde::{Deserialize, Serialize};

/// Classifier output: the ticket appears rotated clockwise by `class_k * theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationEstimate {
    pub class_k: u32,
    pub confidence: f64,
}

fn is_quarter_turn(deg: f64) -> bool {
    let q = deg.rem_euclid(360.0) / 90.0;
    (q - q.round()).abs() < 1e-12
}

fn normalize_deg(deg: f64) -> f64 {
    let d = deg.rem_euclid(360.0);
    if (360.0 - d).abs() < 1e-9 || d.abs() < 1e-9 {
        0.0
    } else {
        d
    }
}

/// Size of the axis-aligned hull of a `w x h` frame rotated by `deg`.
fn rotated_frame_size(w: u32, h: u32, deg: f64) -> (u32, u32) {
    if is_quarter_turn(deg) {
        let quarter = (deg.rem_euclid(360.0) / 90.0).round() as i64 % 2;
        return if quarter == 1 { (h, w) } else { (w, h) };
    }
    let (c, s) = cos_sin_deg(deg);
    let (fw, fh) = (w as f64, h as f64);
    let nw = fw * c.abs() + fh * s.abs();
    let nh = fw * s.abs() + fh * c.abs();
    ((nw - 1e-6).ceil().max(1.0) as u32, (nh - 1e-6).ceil().max(1.0) as u32)
}

/// Shrink a box about its centre until it fits inside `[0,w] x [0,h]`.
/// The centre is kept whenever it lies inside the frame.
fn fit_about_center(b: BBox, w: f64, h: f64) -> BBox {
    let (cx, cy) = b.center();
    let cx = cx.clamp(0.0, w);
    let cy = cy.clamp(0.0, h);
    let hw = (b.w / 2.0).min(cx).min(w - cx).max(0.25);
    let hh = (b.h / 2.0).min(cy).min(h - cy).max(0.25);
    BBox::new(cx - hw, cy - hh, 2.0 * hw, 2.0 * hh)
}

struct PlaneMap {
    deg: f64,
    from_c: (f64, f64),
    to_c: (f64, f64),
}

impl PlaneMap {
    fn point(&self, x: f64, y: f64) -> (f64, f64) {
        let (dx, dy) = rotate_cw(x - self.from_c.0, y - self.from_c.1, self.deg);
        (dx + self.to_c.0, dy + self.to_c.1)
    }

    fn bbox(&self, b: &BBox) -> BBox {
        BBox::hull_of(b.corners().map(|(x, y)| self.point(x, y)))
    }
}

/// Whether a box's upright width lies along the frame's vertical axis at net
/// rotation `net`, taking the nearest quarter turn.
fn extent_swapped(net: f64) -> bool {
    ((net.rem_euclid(360.0) + 45.0 - 1e-9) / 90.0).floor() as i64 % 2 == 1
}

/// Rotate the whole image clockwise by `deg`: frame, ticket boxes, edge
/// pixels and ground-truth regions.
///
/// Quarter turns map coordinates exactly. Other angles rotate ticket-box
/// corners about the image centre and keep the axis-aligned hull, with the
/// new frame sized to the hull of the upright frame under the accumulated
/// rotation. Ground-truth text regions keep their own extent instead: the
/// centre is mapped and width and height follow the nearest quarter turn of
/// the net rotation, so undoing any rotation restores them exactly.
pub fn rotate_clockwise(img: &RawTicketImage, deg: f64) -> RawTicketImage {
    let deg = normalize_deg(deg);
    if deg == 0.0 {
        return img.clone();
    }
    let frame = img.frame_or_default();
    let net = normalize_deg(frame.net_rotation_deg + deg);
    let (nw, nh) = rotated_frame_size(frame.upright_width, frame.upright_height, net);
    let (fw, fh) = (nw as f64, nh as f64);
    let map = PlaneMap {
        deg,
        from_c: (img.width_px as f64 / 2.0, img.height_px as f64 / 2.0),
        to_c: (fw / 2.0, fh / 2.0),
    };
    let exact = is_quarter_turn(deg);
    let place = |b: &BBox| {
        let r = map.bbox(b);
        if exact {
            r
        } else {
            fit_about_center(r, fw, fh)
        }
    };

    let mut out = img.clone();
    out.width_px = nw;
    out.height_px = nh;
    out.frame = Some(Frame {
        upright_width: frame.upright_width,
        upright_height: frame.upright_height,
        net_rotation_deg: net,
    });
    out.ticket_boxes = img
        .ticket_boxes
        .iter()
        .map(|b| ScoredBox {
            bbox: place(&b.bbox),
            score: b.score,
        })
        .collect();
    out.edge_raster = img.edge_raster.as_ref().map(|r| {
        let mut nr = EdgeRaster::new(nw, nh);
        for (x, y) in r.iter_set() {
            let (px, py) = map.point(x as f64 + 0.5, y as f64 + 0.5);
            let qx = px.floor().clamp(0.0, fw - 1.0) as u32;
            let qy = py.floor().clamp(0.0, fh - 1.0) as u32;
            nr.set(qx, qy);
        }
        nr
    });
    if let Some(gt) = out.ground_truth.as_mut() {
        let swap = extent_swapped(frame.net_rotation_deg) != extent_swapped(net);
        for region in gt.regions.iter_mut() {
            region.bbox = if exact {
                map.bbox(&region.bbox)
            } else {
                let b = &region.bbox;
                let (cx, cy) = b.center();
                let (px, py) = map.point(cx, cy);
                let (w, h) = if swap { (b.h, b.w) } else { (b.w, b.h) };
                BBox::new(px - w / 2.0, py - h / 2.0, w, h)
            };
        }
        gt.rotation_deg = normalize_deg(gt.rotation_deg + deg);
    }
    out
}

/// Clockwise correction angle for a rotation class.
pub fn correction_angle(class_k: u32, n_class: u32) -> f64 {
    let theta = 360.0 / n_class as f64;
    ((n_class - class_k % n_class) as f64 * theta).rem_euclid(360.0)
}

/// Undo the rotation reported by `estimate`.
pub fn correct_direction(img: &RawTicketImage, estimate: RotationEstimate, n_class: u32) -> RawTicketImage {
    rotate_clockwise(img, correction_angle(estimate.class_k, n_class))
}

/// Every upright sample rotated clockwise by `k * theta` for `k` in `0..n_class`,
/// labelled `k`.
pub fn build_rotation_training_set(
    upright: &[RawTicketImage],
    n_class: u32,
) -> Result<Vec<(RawTicketImage, u32)>, PreprocessError> {
    if n_class < 2 {
        return Err(PreprocessError::InvalidClassCount(n_class));
    }
    let theta = 360.0 / n_class as f64;
    let mut out = Vec::with_capacity(upright.len() * n_class as usize);
    for img in upright {
        for k in 0..n_class {
            out.push((rotate_clockwise(img, k as f64 * theta), k));
        }
    }
    Ok(out)
}
