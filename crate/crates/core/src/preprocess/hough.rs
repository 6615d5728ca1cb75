//! Straight-line Hough transform over an [`EdgeRaster`].

use super::raster::EdgeRaster;
use super::PreprocessError;
use serde::{Deserialize, Serialize};

/// One accumulator maximum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoughPeak {
    /// Direction of the line in `[0, 180)`, 0 = horizontal, growing clockwise on screen.
    pub angle_deg: f64,
    /// Signed distance of the line from the origin along its normal.
    pub rho_px: f64,
    pub votes: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoughParams {
    pub angle_res_deg: f64,
    pub rho_res_px: f64,
    pub top_k: usize,
}

impl Default for HoughParams {
    fn default() -> Self {
        Self {
            angle_res_deg: 1.0,
            rho_res_px: 1.0,
            top_k: 8,
        }
    }
}

/// Vote accumulator indexed by `(normal angle, rho)`.
pub struct Accumulator {
    pub n_theta: usize,
    pub n_rho: usize,
    pub angle_res_deg: f64,
    pub rho_res_px: f64,
    pub rho_offset: f64,
    pub votes: Vec<u32>,
}

impl Accumulator {
    pub fn at(&self, t: usize, r: usize) -> u32 {
        self.votes[t * self.n_rho + r]
    }

    /// Normal angle in degrees for accumulator row `t`.
    pub fn theta_deg(&self, t: usize) -> f64 {
        t as f64 * self.angle_res_deg
    }

    pub fn rho(&self, r: usize) -> f64 {
        r as f64 * self.rho_res_px - self.rho_offset
    }
}

/// Fill the vote accumulator for every set pixel of `pixels`.
pub fn accumulate(
    width: u32,
    height: u32,
    pixels: &[(u32, u32)],
    angle_res_deg: f64,
    rho_res_px: f64,
) -> Accumulator {
    let n_theta = ((180.0 / angle_res_deg).round() as usize).max(1);
    let diag = ((width as f64).powi(2) + (height as f64).powi(2)).sqrt();
    let n_rho = (2.0 * diag / rho_res_px).ceil() as usize + 2;
    let trig: Vec<(f64, f64)> = (0..n_theta)
        .map(|t| {
            let a = (t as f64 * angle_res_deg).to_radians();
            (a.cos(), a.sin())
        })
        .collect();
    let mut votes = vec![0u32; n_theta * n_rho];
    for &(x, y) in pixels {
        let (fx, fy) = (x as f64 + 0.5, y as f64 + 0.5);
        for (t, &(c, s)) in trig.iter().enumerate() {
            let rho = fx * c + fy * s;
            let r = ((rho + diag) / rho_res_px).round() as usize;
            votes[t * n_rho + r] += 1;
        }
    }
    Accumulator {
        n_theta,
        n_rho,
        angle_res_deg,
        rho_res_px,
        rho_offset: diag,
        votes,
    }
}

/// Local maxima in a 3x3 neighbourhood. A cell that ties with a neighbour
/// earlier in scan order is suppressed, so each plateau yields one peak.
pub fn local_maxima(acc: &Accumulator) -> Vec<(usize, usize, u32)> {
    let mut out = Vec::new();
    for t in 0..acc.n_theta {
        for r in 0..acc.n_rho {
            let v = acc.at(t, r);
            if v == 0 {
                continue;
            }
            let mut keep = true;
            'nbr: for dt in -1i64..=1 {
                for dr in -1i64..=1 {
                    if dt == 0 && dr == 0 {
                        continue;
                    }
                    let (nt, nr) = (t as i64 + dt, r as i64 + dr);
                    if nt < 0 || nr < 0 || nt >= acc.n_theta as i64 || nr >= acc.n_rho as i64 {
                        continue;
                    }
                    let nv = acc.at(nt as usize, nr as usize);
                    let earlier = (dt, dr) < (0, 0);
                    if nv > v || (nv == v && earlier) {
                        keep = false;
                        break 'nbr;
                    }
                }
            }
            if keep {
                out.push((t, r, v));
            }
        }
    }
    out.sort_by(|a, b| b.2.cmp(&a.2).then((a.0, a.1).cmp(&(b.0, b.1))));
    out
}

/// Direction of the line whose normal points along `theta_deg`.
pub fn line_angle_from_normal(theta_deg: f64) -> f64 {
    (theta_deg + 90.0).rem_euclid(180.0)
}

/// Top `params.top_k` straight lines in the raster.
pub fn hough_lines(raster: &EdgeRaster, params: HoughParams) -> Result<Vec<HoughPeak>, PreprocessError> {
    let pixels: Vec<(u32, u32)> = raster.iter_set().collect();
    hough_lines_from_pixels(raster.width(), raster.height(), &pixels, params)
}

pub(crate) fn hough_lines_from_pixels(
    width: u32,
    height: u32,
    pixels: &[(u32, u32)],
    params: HoughParams,
) -> Result<Vec<HoughPeak>, PreprocessError> {
    if pixels.is_empty() {
        return Err(PreprocessError::EmptyRaster);
    }
    if !(params.angle_res_deg > 0.0 && params.rho_res_px > 0.0) {
        return Err(PreprocessError::InvalidParameter("Hough resolutions must be positive"));
    }
    let acc = accumulate(width, height, pixels, params.angle_res_deg, params.rho_res_px);
    Ok(local_maxima(&acc)
        .into_iter()
        .take(params.top_k)
        .map(|(t, r, votes)| {
            let theta = acc.theta_deg(t);
            let rho = acc.rho(r);
            let angle = refine_angle(pixels, theta, rho, params.angle_res_deg)
                .unwrap_or_else(|| line_angle_from_normal(theta));
            HoughPeak {
                angle_deg: angle,
                rho_px: rho,
                votes,
            }
        })
        .collect())
}

/// Principal direction of the pixels lying within 1.5 px of the peak line.
/// The accumulator angle is quantized and pixel rounding can tip a short
/// line into a neighbouring bin; a total-least-squares fit over the
/// supporting pixels removes both effects. Falls back to the bin angle when
/// support is thin or the fit wanders more than one bin away.
fn refine_angle(pixels: &[(u32, u32)], theta_deg: f64, rho: f64, angle_res_deg: f64) -> Option<f64> {
    let (c, s) = {
        let a = theta_deg.to_radians();
        (a.cos(), a.sin())
    };
    let support: Vec<(f64, f64)> = pixels
        .iter()
        .map(|&(x, y)| (x as f64 + 0.5, y as f64 + 0.5))
        .filter(|&(x, y)| (x * c + y * s - rho).abs() <= 1.5)
        .collect();
    if support.len() < 8 {
        return None;
    }
    let n = support.len() as f64;
    let (mx, my) = support.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x / n, b + y / n));
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for &(x, y) in &support {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    let refined = (0.5 * (2.0 * sxy).atan2(sxx - syy)).to_degrees().rem_euclid(180.0);
    let bin = line_angle_from_normal(theta_deg);
    (angle_distance_mod180(refined, bin) <= angle_res_deg).then_some(if refined >= 180.0 { 0.0 } else { refined })
}

/// Distance between two undirected line angles.
pub fn angle_distance_mod180(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(180.0);
    d.min(180.0 - d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horizontal_row_is_zero_degrees() {
        let mut r = EdgeRaster::new(64, 32);
        for x in 0..64 {
            r.set(x, 10);
        }
        let peaks = hough_lines(&r, HoughParams::default()).unwrap();
        assert!(angle_distance_mod180(peaks[0].angle_deg, 0.0) < 1e-9);
        assert_eq!(peaks[0].votes, 64);
    }

    #[test]
    fn vertical_column_is_ninety_degrees() {
        let mut r = EdgeRaster::new(32, 64);
        for y in 0..64 {
            r.set(5, y);
        }
        let peaks = hough_lines(&r, HoughParams::default()).unwrap();
        assert!((peaks[0].angle_deg - 90.0).abs() < 1e-9);
    }

    #[test]
    fn empty_raster_is_an_error() {
        let r = EdgeRaster::new(10, 10);
        assert!(matches!(
            hough_lines(&r, HoughParams::default()),
            Err(PreprocessError::EmptyRaster)
        ));
    }

    #[test]
    fn peaks_sorted_by_votes() {
        let mut r = EdgeRaster::new(100, 100);
        r.draw_line(0.0, 10.0, 99.0, 10.0);
        r.draw_line(10.0, 0.0, 10.0, 49.0);
        let peaks = hough_lines(&r, HoughParams::default()).unwrap();
        assert!(peaks.windows(2).all(|w| w[0].votes >= w[1].votes));
        assert_eq!(peaks[0].votes, 100);
    }
}
