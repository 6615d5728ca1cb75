//! Wall-clock comparison of type-routed processing against forced
//! full-surface processing, with a cost-model fit over the routed timings.

use crate::batch::{load_fixture, FixtureFailure};
use crate::CliError;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;
use ticketflow_core::metrics::{
    fit_cost_model, speedup_report, CategoryTiming, CostModel, MetricsError, SpeedupReport, TimingLogEntry,
};
use ticketflow_core::warehouse::UNCLASSIFIED;
use ticketflow_core::{process_ticket_with, BackendSet, PipelineConfig, ProcessOptions, ProcessOutcome, RawTicketImage};

pub const ROUTED: &str = "routed";
pub const FULL_SURFACE: &str = "full-surface";

#[derive(Debug, Clone, Copy)]
pub struct BenchOptions {
    pub repeat: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CostFit {
    Fitted { model: CostModel },
    Underdetermined { reason: String },
    Failed { reason: String },
}

impl From<Result<CostModel, MetricsError>> for CostFit {
    fn from(r: Result<CostModel, MetricsError>) -> Self {
        match r {
            Ok(model) => CostFit::Fitted { model },
            Err(MetricsError::Underdetermined(reason)) => CostFit::Underdetermined { reason },
            Err(e) => CostFit::Failed { reason: e.to_string() },
        }
    }
}

impl CostFit {
    pub fn to_text(&self) -> String {
        match self {
            CostFit::Fitted { model: m } => format!(
                "T = {:.6e} (w+h) + {:.6e} A_text + {:.6e} A_information + {:.4}  (n {}, rms {:.4} ms)\n",
                m.alpha, m.beta, m.gamma, m.c, m.n, m.residual_rms
            ),
            CostFit::Underdetermined { reason } => format!("cost model underdetermined: {reason}\n"),
            CostFit::Failed { reason } => format!("cost model failed: {reason}\n"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTiming {
    pub run: usize,
    pub routed_ms: f64,
    pub full_surface_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub tickets: usize,
    pub repeat: usize,
    /// Corpus totals per run.
    pub runs: Vec<RunTiming>,
    pub median_routed_ms: f64,
    pub median_full_surface_ms: f64,
    /// One entry per ticket, run and route.
    pub timing_log: Vec<TimingLogEntry>,
    /// Fit over per-ticket median routed timings.
    pub cost_model: CostFit,
    /// Per-category mean of per-ticket medians, weighted by ticket share.
    pub speedup: Option<SpeedupReport>,
    pub skipped: Vec<FixtureFailure>,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn areas(outcomes: &[ProcessOutcome]) -> (f64, f64) {
    let text = outcomes.iter().flat_map(|o| &o.record.regions).map(|r| r.bbox.area()).sum();
    let info = outcomes.iter().flat_map(|o| o.record.field_boxes.values()).map(|b| b.area()).sum();
    (text, info)
}

fn timed(img: &RawTicketImage, cfg: &PipelineConfig, backends: &BackendSet, full: bool) -> Result<(f64, Vec<ProcessOutcome>), String> {
    let start = Instant::now();
    let out = process_ticket_with(img, cfg, backends, ProcessOptions { force_full_surface: full }).map_err(|e| e.to_string())?;
    Ok((start.elapsed().as_secs_f64() * 1000.0, out))
}

struct Ticket {
    name: String,
    img: RawTicketImage,
    category: String,
    routed: Vec<f64>,
    full: Vec<f64>,
    routed_areas: (f64, f64),
}

pub fn run_bench(files: &[PathBuf], cfg: &PipelineConfig, opts: BenchOptions) -> Result<BenchReport, CliError> {
    if opts.repeat == 0 {
        return Err(CliError::Input("--repeat must be at least 1".into()));
    }
    let backends = BackendSet::from_config(&cfg.backends, cfg);
    let mut skipped = Vec::new();
    let mut tickets = Vec::new();
    for f in files {
        let name = f.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned());
        // a warm-up pass also weeds out fixtures the pipeline refuses
        let loaded = load_fixture(f)
            .map_err(|e| e.to_string())
            .and_then(|img| timed(&img, cfg, &backends, false).map(|(_, out)| (img, out)));
        match loaded {
            Ok((img, out)) => {
                let category = out
                    .first()
                    .and_then(|o| o.record.category.clone())
                    .unwrap_or_else(|| UNCLASSIFIED.to_string());
                tickets.push(Ticket {
                    name,
                    img,
                    category,
                    routed: Vec::new(),
                    full: Vec::new(),
                    routed_areas: areas(&out),
                });
            }
            Err(message) => skipped.push(FixtureFailure { file: name, message }),
        }
    }
    if tickets.is_empty() {
        return Err(CliError::Input("corpus holds no usable fixtures".into()));
    }

    let mut runs = Vec::new();
    let mut timing_log = Vec::new();
    for run in 0..opts.repeat {
        let mut totals = (0.0, 0.0);
        for t in tickets.iter_mut() {
            // the arms alternate per ticket so drift hits both alike
            for full in [false, true] {
                let (ms, out) = timed(&t.img, cfg, &backends, full).map_err(CliError::Input)?;
                let (a_text, a_info) = areas(&out);
                let mut e = TimingLogEntry::new(t.img.width_px, t.img.height_px, a_text, a_info, ms);
                e.ticket = Some(t.name.clone());
                e.category = Some(t.category.clone());
                e.route = Some(if full { FULL_SURFACE } else { ROUTED }.to_string());
                timing_log.push(e);
                if full {
                    t.full.push(ms);
                    totals.1 += ms;
                } else {
                    t.routed.push(ms);
                    totals.0 += ms;
                }
            }
        }
        runs.push(RunTiming {
            run,
            routed_ms: totals.0,
            full_surface_ms: totals.1,
        });
    }

    let fit_log: Vec<TimingLogEntry> = tickets
        .iter()
        .map(|t| {
            TimingLogEntry::new(
                t.img.width_px,
                t.img.height_px,
                t.routed_areas.0,
                t.routed_areas.1,
                median(t.routed.clone()),
            )
        })
        .collect();

    let mut per_category: BTreeMap<&str, (f64, f64, usize)> = BTreeMap::new();
    for t in &tickets {
        let e = per_category.entry(t.category.as_str()).or_default();
        e.0 += median(t.routed.clone());
        e.1 += median(t.full.clone());
        e.2 += 1;
    }
    let n = tickets.len() as f64;
    let timings: Vec<CategoryTiming> = per_category
        .iter()
        .map(|(c, (fast, general, k))| CategoryTiming {
            category: c.to_string(),
            fast_ms: fast / *k as f64,
            general_ms: general / *k as f64,
            weight: *k as f64 / n,
        })
        .collect();

    Ok(BenchReport {
        tickets: tickets.len(),
        repeat: opts.repeat,
        median_routed_ms: median(runs.iter().map(|r| r.routed_ms).collect()),
        median_full_surface_ms: median(runs.iter().map(|r| r.full_surface_ms).collect()),
        runs,
        timing_log,
        cost_model: fit_cost_model(&fit_log).into(),
        speedup: speedup_report(&timings).ok(),
        skipped,
    })
}

impl BenchReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:>4} {:>12} {:>16}", "run", "routed ms", "full-surface ms");
        for r in &self.runs {
            let _ = writeln!(s, "{:>4} {:>12.3} {:>16.3}", r.run, r.routed_ms, r.full_surface_ms);
        }
        let _ = writeln!(
            s,
            "{:>4} {:>12.3} {:>16.3}",
            "med", self.median_routed_ms, self.median_full_surface_ms
        );
        s.push_str(&self.cost_model.to_text());
        if let Some(sp) = &self.speedup {
            s.push_str(&sp.to_text());
        }
        s
    }
}
