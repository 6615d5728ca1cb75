//! Recognition accuracy, the processing-time cost model and speedup reports.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("nothing to evaluate")]
    EmptyEvaluation,
    #[error("invalid sample: {0}")]
    InvalidSample(String),
    #[error("cost model is underdetermined: {0}")]
    Underdetermined(String),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("invalid timing: {0}")]
    InvalidTiming(String),
}

/// String-level recognition counts for one ticket.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleEval {
    #[serde(alias = "R_char")]
    pub r_char: u64,
    #[serde(alias = "N_char")]
    pub n_char: u64,
    pub info_fields_all_correct: bool,
}

impl SampleEval {
    pub fn new(r_char: u64, n_char: u64, info_fields_all_correct: bool) -> Self {
        Self {
            r_char,
            n_char,
            info_fields_all_correct,
        }
    }

    pub fn validate(&self) -> Result<(), MetricsError> {
        if self.r_char > self.n_char {
            return Err(MetricsError::InvalidSample(format!(
                "{} correct strings out of {}",
                self.r_char, self.n_char
            )));
        }
        Ok(())
    }
}

/// Correct strings over all strings, summed across samples.
pub fn p_char(samples: &[SampleEval]) -> Result<f64, MetricsError> {
    let mut r = 0u64;
    let mut n = 0u64;
    for s in samples {
        s.validate()?;
        r += s.r_char;
        n += s.n_char;
    }
    if n == 0 {
        return Err(MetricsError::EmptyEvaluation);
    }
    Ok(r as f64 / n as f64)
}

/// Share of tickets whose information fields are all correct.
pub fn p_ticket(samples: &[SampleEval]) -> Result<f64, MetricsError> {
    if samples.is_empty() {
        return Err(MetricsError::EmptyEvaluation);
    }
    let ok = samples.iter().filter(|s| s.info_fields_all_correct).count();
    Ok(ok as f64 / samples.len() as f64)
}

/// One measured ticket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingLogEntry {
    pub w_px: u32,
    pub h_px: u32,
    #[serde(alias = "A_text")]
    pub a_text: f64,
    #[serde(alias = "A_information")]
    pub a_information: f64,
    pub t_ms: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ticket: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    /// Which pipeline variant produced the timing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub route: Option<String>,
}

impl TimingLogEntry {
    pub fn new(w_px: u32, h_px: u32, a_text: f64, a_information: f64, t_ms: f64) -> Self {
        Self {
            w_px,
            h_px,
            a_text,
            a_information,
            t_ms,
            ticket: None,
            category: None,
            route: None,
        }
    }

    fn design_row(&self) -> [f64; 4] {
        [(self.w_px + self.h_px) as f64, self.a_text, self.a_information, 1.0]
    }
}

/// T = alpha (w + h) + beta A_text + gamma A_information + c.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub c: f64,
    /// Standard errors of (alpha, beta, gamma, c).
    pub std_errors: [f64; 4],
    pub residual_rms: f64,
    pub n: usize,
}

impl CostModel {
    pub fn coefficients(&self) -> [f64; 4] {
        [self.alpha, self.beta, self.gamma, self.c]
    }

    pub fn predict(&self, e: &TimingLogEntry) -> f64 {
        let x = e.design_row();
        self.coefficients().iter().zip(x).map(|(b, x)| b * x).sum()
    }
}

const P: usize = 4;
/// Pivot magnitude, relative to the largest diagonal entry, below which the
/// scaled normal matrix counts as singular.
const RANK_TOL: f64 = 1e-12;

/// Solve `m x = b` by Gaussian elimination with partial pivoting.
fn solve_pivoted(m: &[[f64; P]; P], b: &[f64; P]) -> Option<[f64; P]> {
    let scale = (0..P).map(|i| m[i][i].abs()).fold(0.0, f64::max);
    let mut a = *m;
    let mut y = *b;
    for col in 0..P {
        let piv = (col..P).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= RANK_TOL * scale {
            return None;
        }
        a.swap(col, piv);
        y.swap(col, piv);
        for row in col + 1..P {
            let f = a[row][col] / a[col][col];
            for k in col..P {
                a[row][k] -= f * a[col][k];
            }
            y[row] -= f * y[col];
        }
    }
    let mut x = [0.0; P];
    for row in (0..P).rev() {
        let s: f64 = (row + 1..P).map(|k| a[row][k] * x[k]).sum();
        x[row] = (y[row] - s) / a[row][row];
    }
    Some(x)
}

/// Ordinary least squares over the design [(w + h), A_text, A_information, 1].
/// Columns are scaled to unit norm before forming the normal equations and the
/// solution is polished with a few rounds of residual refinement.
pub fn fit_cost_model(log: &[TimingLogEntry]) -> Result<CostModel, MetricsError> {
    if log.len() < P {
        return Err(MetricsError::Underdetermined(format!(
            "{} entries for {P} coefficients",
            log.len()
        )));
    }
    for e in log {
        let vals = [e.a_text, e.a_information, e.t_ms];
        if vals.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(MetricsError::InvalidTiming(format!("{e:?}")));
        }
    }
    let rows: Vec<[f64; P]> = log.iter().map(TimingLogEntry::design_row).collect();
    let t: Vec<f64> = log.iter().map(|e| e.t_ms).collect();

    let mut norm = [0.0; P];
    for r in &rows {
        for j in 0..P {
            norm[j] += r[j] * r[j];
        }
    }
    if norm.iter().any(|&n| n == 0.0) {
        return Err(MetricsError::Underdetermined("a design column is identically zero".into()));
    }
    let d: [f64; P] = norm.map(|n| 1.0 / n.sqrt());
    let scaled: Vec<[f64; P]> = rows.iter().map(|r| std::array::from_fn(|j| r[j] * d[j])).collect();

    let mut m = [[0.0; P]; P];
    for r in &scaled {
        for i in 0..P {
            for j in 0..P {
                m[i][j] += r[i] * r[j];
            }
        }
    }
    let at = |v: &[f64]| -> [f64; P] {
        let mut out = [0.0; P];
        for (r, vi) in scaled.iter().zip(v) {
            for j in 0..P {
                out[j] += r[j] * vi;
            }
        }
        out
    };
    let singular = || MetricsError::Underdetermined("design matrix has rank below 4".into());
    let mut beta = solve_pivoted(&m, &at(&t)).ok_or_else(singular)?;
    let residual = |beta: &[f64; P]| -> Vec<f64> {
        scaled
            .iter()
            .zip(&t)
            .map(|(r, ti)| ti - (0..P).map(|j| r[j] * beta[j]).sum::<f64>())
            .collect()
    };
    for _ in 0..3 {
        let delta = solve_pivoted(&m, &at(&residual(&beta))).ok_or_else(singular)?;
        for j in 0..P {
            beta[j] += delta[j];
        }
    }

    let res = residual(&beta);
    let rss: f64 = res.iter().map(|r| r * r).sum();
    let n = log.len();
    let sigma2 = if n > P { rss / (n - P) as f64 } else { 0.0 };
    let mut se = [0.0; P];
    for j in 0..P {
        let mut e = [0.0; P];
        e[j] = 1.0;
        let col = solve_pivoted(&m, &e).ok_or_else(singular)?;
        se[j] = (sigma2 * col[j]).max(0.0).sqrt() * d[j];
    }
    let coef: [f64; P] = std::array::from_fn(|j| beta[j] * d[j]);
    Ok(CostModel {
        alpha: coef[0],
        beta: coef[1],
        gamma: coef[2],
        c: coef[3],
        std_errors: se,
        residual_rms: (rss / n as f64).sqrt(),
        n,
    })
}

/// Timings of one category under the type-routed and the general pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryTiming {
    pub category: String,
    pub fast_ms: f64,
    pub general_ms: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedupRow {
    pub category: String,
    pub fast_ms: f64,
    pub general_ms: f64,
    pub weight: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub formula: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedupReport {
    pub rows: Vec<SpeedupRow>,
    /// Σ w·general / Σ w·fast. The headline figure.
    pub ratio_of_weighted_sums: Aggregate,
    /// Σ w·(general / fast).
    pub weighted_mean_of_ratios: Aggregate,
    pub arithmetic_mean_fast_ms: f64,
    pub arithmetic_mean_general_ms: f64,
    pub weighted_mean_fast_ms: f64,
    pub weighted_mean_general_ms: f64,
}

pub const WEIGHT_TOLERANCE: f64 = 1e-9;

pub fn speedup_report(timings: &[CategoryTiming]) -> Result<SpeedupReport, MetricsError> {
    if timings.is_empty() {
        return Err(MetricsError::EmptyEvaluation);
    }
    for t in timings {
        if !(t.fast_ms > 0.0 && t.general_ms > 0.0) || !t.fast_ms.is_finite() || !t.general_ms.is_finite() {
            return Err(MetricsError::InvalidTiming(format!(
                "{}: timings must be positive (fast {}, general {})",
                t.category, t.fast_ms, t.general_ms
            )));
        }
        if !(t.weight >= 0.0 && t.weight.is_finite()) {
            return Err(MetricsError::InvalidWeights(format!("{}: weight {}", t.category, t.weight)));
        }
    }
    let total: f64 = timings.iter().map(|t| t.weight).sum();
    if (total - 1.0).abs() > WEIGHT_TOLERANCE {
        return Err(MetricsError::InvalidWeights(format!("weights sum to {total}, expected 1")));
    }
    let rows: Vec<SpeedupRow> = timings
        .iter()
        .map(|t| SpeedupRow {
            category: t.category.clone(),
            fast_ms: t.fast_ms,
            general_ms: t.general_ms,
            weight: t.weight,
            ratio: t.general_ms / t.fast_ms,
        })
        .collect();
    let wsum = |f: fn(&SpeedupRow) -> f64| rows.iter().map(|r| r.weight * f(r)).sum::<f64>();
    let n = rows.len() as f64;
    let weighted_fast = wsum(|r| r.fast_ms);
    let weighted_general = wsum(|r| r.general_ms);
    Ok(SpeedupReport {
        ratio_of_weighted_sums: Aggregate {
            formula: "sum(w_i * general_i) / sum(w_i * fast_i)".into(),
            value: weighted_general / weighted_fast,
        },
        weighted_mean_of_ratios: Aggregate {
            formula: "sum(w_i * general_i / fast_i)".into(),
            value: wsum(|r| r.ratio),
        },
        arithmetic_mean_fast_ms: rows.iter().map(|r| r.fast_ms).sum::<f64>() / n,
        arithmetic_mean_general_ms: rows.iter().map(|r| r.general_ms).sum::<f64>() / n,
        weighted_mean_fast_ms: weighted_fast,
        weighted_mean_general_ms: weighted_general,
        rows,
    })
}

impl SpeedupReport {
    /// Plain-text table with both aggregates and their formulas.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<16} {:>10} {:>12} {:>8} {:>8}", "category", "fast ms", "general ms", "weight", "ratio");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<16} {:>10.2} {:>12.2} {:>8.4} {:>8.2}",
                r.category, r.fast_ms, r.general_ms, r.weight, r.ratio
            );
        }
        let _ = writeln!(
            s,
            "aggregate {} = {:.4}",
            self.ratio_of_weighted_sums.formula, self.ratio_of_weighted_sums.value
        );
        let _ = writeln!(
            s,
            "aggregate {} = {:.4}",
            self.weighted_mean_of_ratios.formula, self.weighted_mean_of_ratios.value
        );
        let _ = writeln!(
            s,
            "mean fast ms: arithmetic {:.2}, weighted {:.2}",
            self.arithmetic_mean_fast_ms, self.weighted_mean_fast_ms
        );
        let _ = writeln!(
            s,
            "mean general ms: arithmetic {:.2}, weighted {:.2}",
            self.arithmetic_mean_general_ms, self.weighted_mean_general_ms
        );
        s
    }
}

/// Plain and weighted mean of per-ticket times, reported side by side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanTimes {
    pub arithmetic_ms: f64,
    pub weighted_ms: f64,
}

pub fn mean_times(times_ms: &[f64], weights: &[f64]) -> Result<MeanTimes, MetricsError> {
    if times_ms.is_empty() {
        return Err(MetricsError::EmptyEvaluation);
    }
    if weights.len() != times_ms.len() {
        return Err(MetricsError::InvalidWeights(format!(
            "{} weights for {} times",
            weights.len(),
            times_ms.len()
        )));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > WEIGHT_TOLERANCE || weights.iter().any(|w| *w < 0.0) {
        return Err(MetricsError::InvalidWeights(format!("weights sum to {total}, expected 1")));
    }
    Ok(MeanTimes {
        arithmetic_ms: times_ms.iter().sum::<f64>() / times_ms.len() as f64,
        weighted_ms: times_ms.iter().zip(weights).map(|(t, w)| t * w).sum(),
    })
}
