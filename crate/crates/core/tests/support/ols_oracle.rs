//! Timing logs from planted cost coefficients, and an SVD least-squares
//! oracle for the fitted model.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use ticketflow_core::metrics::TimingLogEntry;

pub const PLANTED: [f64; 4] = [0.01, 0.002, 0.03, 5.0];

/// `n` entries with ticket-like sizes and areas; `sigma_ms` Gaussian noise.
pub fn planted_log(rng: &mut impl Rng, n: usize, coef: [f64; 4], sigma_ms: f64) -> Vec<TimingLogEntry> {
    let noise = Normal::new(0.0, sigma_ms.max(f64::MIN_POSITIVE)).unwrap();
    (0..n)
        .map(|_| {
            let w = rng.random_range(400..2600u32);
            let h = rng.random_range(400..1800u32);
            let page = w as f64 * h as f64;
            let a_text = page * rng.random_range(0.05..0.45);
            let a_info = a_text * rng.random_range(0.05..0.6);
            let clean = coef[0] * (w + h) as f64 + coef[1] * a_text + coef[2] * a_info + coef[3];
            let t = if sigma_ms > 0.0 { clean + noise.sample(rng) } else { clean };
            TimingLogEntry::new(w, h, a_text, a_info, t)
        })
        .collect()
}

pub struct OracleFit {
    pub coefficients: [f64; 4],
    pub std_errors: [f64; 4],
}

/// Least squares through the SVD of the raw design matrix, with standard
/// errors from the diagonal of (X^T X)^-1 computed the same way.
pub fn svd_fit(log: &[TimingLogEntry]) -> OracleFit {
    let n = log.len();
    let x = DMatrix::from_fn(n, 4, |i, j| {
        let e = &log[i];
        match j {
            0 => (e.w_px + e.h_px) as f64,
            1 => e.a_text,
            2 => e.a_information,
            _ => 1.0,
        }
    });
    let y = DVector::from_iterator(n, log.iter().map(|e| e.t_ms));
    let svd = x.clone().svd(true, true);
    let beta = svd.solve(&y, 1e-14).expect("svd solve");
    let resid = &y - &x * &beta;
    let sigma2 = resid.norm_squared() / (n as f64 - 4.0);
    // (X^T X)^-1 = V S^-2 V^T
    let v = svd.v_t.as_ref().unwrap().transpose();
    let s = &svd.singular_values;
    let mut se = [0.0; 4];
    for (j, slot) in se.iter_mut().enumerate() {
        let var: f64 = (0..4).map(|k| v[(j, k)].powi(2) / s[k].powi(2)).sum();
        *slot = (sigma2 * var).sqrt();
    }
    OracleFit {
        coefficients: [beta[0], beta[1], beta[2], beta[3]],
        std_errors: se,
    }
}

pub fn max_relative_error(got: &[f64; 4], want: &[f64; 4]) -> f64 {
    got.iter()
        .zip(want)
        .map(|(g, w)| ((g - w) / w).abs())
        .fold(0.0, f64::max)
}
