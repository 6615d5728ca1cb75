//! Rotation classifiers: the interface, a ground-truth oracle, and the
//! Hough-transform baseline.

use super::hough::{angle_distance_mod180, hough_lines_from_pixels, HoughParams, HoughPeak};
use super::image::RawTicketImage;
use super::raster::EdgeRaster;
use super::rotate::{correction_angle, RotationEstimate};
use super::PreprocessError;
use crate::geometry::rotate_cw;
use crate::structure::fuzzy_match_keyword;

/// Anchor regions must sit in this top fraction of the upright layout.
pub const ANCHOR_TOP_BAND: f64 = 0.25;
/// Pixel budget for one Hough pass; larger rasters are thinned evenly.
pub const HOUGH_PIXEL_BUDGET: usize = 4096;

pub trait RotationClassifier: Send + Sync {
    fn n_class(&self) -> u32;
    fn predict(&self, ticket: &RawTicketImage) -> Result<RotationEstimate, PreprocessError>;
}

/// Estimate a ticket's rotation class, checking the classifier agrees with
/// the configured class count.
pub fn detect_rotation(
    ticket: &RawTicketImage,
    classifier: &dyn RotationClassifier,
    n_class: u32,
) -> Result<RotationEstimate, PreprocessError> {
    if classifier.n_class() != n_class {
        return Err(PreprocessError::ClassifierUnavailable(format!(
            "rotation classifier built for {} classes, configuration asks for {n_class}",
            classifier.n_class()
        )));
    }
    let est = classifier.predict(ticket)?;
    debug_assert!(est.class_k < n_class);
    Ok(est)
}

/// Reads the rotation recorded in fixture ground truth.
#[derive(Debug, Clone, Copy)]
pub struct OracleRotationClassifier {
    pub n_class: u32,
}

impl RotationClassifier for OracleRotationClassifier {
    fn n_class(&self) -> u32 {
        self.n_class
    }

    fn predict(&self, ticket: &RawTicketImage) -> Result<RotationEstimate, PreprocessError> {
        let gt = ticket
            .ground_truth
            .as_ref()
            .ok_or_else(|| PreprocessError::ClassifierUnavailable("ticket carries no ground truth".into()))?;
        let theta = 360.0 / self.n_class as f64;
        let k = (gt.rotation_deg.rem_euclid(360.0) / theta).round() as u32 % self.n_class;
        Ok(RotationEstimate {
            class_k: k,
            confidence: 1.0,
        })
    }
}

/// Dominant text-line angle from the Hough transform, snapped to the nearest
/// multiple of `theta`; the remaining 180-degree ambiguity is settled by
/// requiring the title (anchor) region to land in the top band once the
/// candidate correction is applied.
#[derive(Debug, Clone)]
pub struct HoughOrientationClassifier {
    pub n_class: u32,
    pub angle_res_deg: f64,
    pub title_keywords: Vec<String>,
}

impl HoughOrientationClassifier {
    pub fn new(n_class: u32, title_keywords: Vec<String>) -> Self {
        Self {
            n_class,
            angle_res_deg: 1.0,
            title_keywords,
        }
    }

    fn theta(&self) -> f64 {
        360.0 / self.n_class as f64
    }

    /// Dominant line direction in `[0, 180)`.
    pub fn dominant_angle(&self, raster: &EdgeRaster) -> Result<f64, PreprocessError> {
        let all: Vec<(u32, u32)> = raster.iter_set().collect();
        let stride = all.len().div_ceil(HOUGH_PIXEL_BUDGET).max(1);
        let sample: Vec<(u32, u32)> = all.into_iter().step_by(stride).collect();
        let params = HoughParams {
            angle_res_deg: self.angle_res_deg,
            rho_res_px: 1.0,
            top_k: 8,
        };
        let peaks = hough_lines_from_pixels(raster.width(), raster.height(), &sample, params)?;
        // enhance: overlay the detected lines and vote again
        let mut enhanced = EdgeRaster::from_pixels(raster.width(), raster.height(), sample.iter().copied());
        for p in &peaks {
            overlay_segment(&mut enhanced, &sample, p.angle_deg, p.rho_px);
        }
        let pixels: Vec<(u32, u32)> = enhanced.iter_set().collect();
        let again = hough_lines_from_pixels(raster.width(), raster.height(), &pixels, params)?;
        Ok(dominant_direction(&again, 2.0 * self.angle_res_deg))
    }

    fn anchor_in_top_band(&self, ticket: &RawTicketImage, k: u32) -> Option<bool> {
        let regions = ticket.regions();
        let anchor = regions.iter().position(|r| {
            self.title_keywords
                .iter()
                .any(|kw| fuzzy_match_keyword(&r.text, kw).is_some())
        })?;
        if regions.len() < 2 {
            return None;
        }
        let phi = correction_angle(k, self.n_class);
        let (cx, cy) = (ticket.width_px as f64 / 2.0, ticket.height_px as f64 / 2.0);
        let ys: Vec<f64> = regions
            .iter()
            .map(|r| {
                let (x, y) = r.bbox.center();
                rotate_cw(x - cx, y - cy, phi).1
            })
            .collect();
        let (lo, hi) = ys.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &y| (a.min(y), b.max(y)));
        if hi - lo <= 0.0 {
            return None;
        }
        Some((ys[anchor] - lo) / (hi - lo) <= ANCHOR_TOP_BAND)
    }
}

/// Direction with the most line support: peaks within `tol` of each other
/// pool their votes, and the strongest peak of the heaviest pool gives the
/// angle. Text rows are many parallel lines while the frame contributes two
/// per direction, so a single long edge cannot outvote the rows.
fn dominant_direction(peaks: &[HoughPeak], tol: f64) -> f64 {
    let mut best = (0u64, peaks[0].angle_deg);
    for p in peaks {
        let pool: u64 = peaks
            .iter()
            .filter(|q| angle_distance_mod180(p.angle_deg, q.angle_deg) <= tol)
            .map(|q| q.votes as u64)
            .sum();
        if pool > best.0 {
            best = (pool, p.angle_deg);
        }
    }
    best.1
}

/// Draw the detected line over the span of its supporting pixels. Drawing
/// it across the whole image would hand extra votes to whichever direction
/// the image is longer in.
fn overlay_segment(r: &mut EdgeRaster, pixels: &[(u32, u32)], angle_deg: f64, rho: f64) {
    // the accumulator normal is the line direction minus 90 degrees, taken
    // in [0, 180); near the wrap the refined angle may sit on the other side
    let normal = (angle_deg - 90.0).rem_euclid(180.0).to_radians();
    let support_for = |sign: f64| -> Vec<(f64, f64)> {
        let (nx, ny) = (sign * normal.cos(), sign * normal.sin());
        pixels
            .iter()
            .map(|&(x, y)| (x as f64 + 0.5, y as f64 + 0.5))
            .filter(|&(x, y)| (x * nx + y * ny - rho).abs() <= 2.0)
            .collect()
    };
    let (a, b) = (support_for(1.0), support_for(-1.0));
    let support = if a.len() >= b.len() { a } else { b };
    if support.len() < 2 {
        return;
    }
    let n = support.len() as f64;
    let (mx, my) = support.iter().fold((0.0, 0.0), |(sx, sy), &(x, y)| (sx + x / n, sy + y / n));
    let dir = angle_deg.to_radians();
    let (dx, dy) = (dir.cos(), dir.sin());
    let (lo, hi) = support.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(x, y)| {
        let t = (x - mx) * dx + (y - my) * dy;
        (lo.min(t), hi.max(t))
    });
    r.draw_line(
        mx + dx * lo - 0.5,
        my + dy * lo - 0.5,
        mx + dx * hi - 0.5,
        my + dy * hi - 0.5,
    );
}

impl RotationClassifier for HoughOrientationClassifier {
    fn n_class(&self) -> u32 {
        self.n_class
    }

    fn predict(&self, ticket: &RawTicketImage) -> Result<RotationEstimate, PreprocessError> {
        let raster = ticket
            .edge_raster
            .as_ref()
            .ok_or_else(|| PreprocessError::ClassifierUnavailable("ticket carries no edge raster".into()))?;
        let angle = self.dominant_angle(raster)?;
        let theta = self.theta();
        let distances: Vec<f64> = (0..self.n_class)
            .map(|k| angle_distance_mod180(angle, k as f64 * theta))
            .collect();
        let residual = distances.iter().copied().fold(f64::INFINITY, f64::min);
        let candidates: Vec<u32> = (0..self.n_class)
            .filter(|&k| distances[k as usize] - residual < 1e-9)
            .collect();
        let passing: Vec<u32> = candidates
            .iter()
            .copied()
            .filter(|&k| self.anchor_in_top_band(ticket, k) == Some(true))
            .collect();
        let (class_k, anchored) = match passing.as_slice() {
            [only] => (*only, true),
            [first, ..] => (*first, false),
            [] => (candidates[0], false),
        };
        let snap = 1.0 - (residual - self.angle_res_deg).max(0.0) / (theta / 2.0);
        let confidence = snap.clamp(0.0, 1.0) * if anchored { 1.0 } else { 0.5 };
        Ok(RotationEstimate { class_k, confidence })
    }
}
