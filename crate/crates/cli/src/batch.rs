//! Bulk processing of a fixture directory.

use crate::{parse_json, read_file, CliError};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use ticketflow_core::fixtures::evaluate_fields;
use ticketflow_core::metrics::{p_char, p_ticket, SampleEval};
use ticketflow_core::{process_ticket, BackendSet, OutcomeStatus, PipelineConfig, ProcessOutcome, RawTicketImage};

/// Name of the generator's manifest, skipped when listing fixtures.
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BatchSummary {
    pub files: usize,
    pub tickets: usize,
    pub accepted: usize,
    pub diverted: usize,
    pub fixture_errors: usize,
    /// Over tickets that carry planted fields; absent when none do.
    pub p_char: Option<f64>,
    pub p_ticket: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureFailure {
    pub file: String,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct BatchRun {
    pub outcomes: Vec<ProcessOutcome>,
    pub evals: Vec<SampleEval>,
    pub failures: Vec<FixtureFailure>,
    pub summary: BatchSummary,
}

impl BatchRun {
    /// One JSON line per outcome, in input order.
    pub fn to_jsonl(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for o in &self.outcomes {
            serde_json::to_writer(&mut out, o).expect("outcomes serialize");
            out.push(b'\n');
        }
        out
    }
}

/// `*.json` files in `dir` other than the manifest, sorted by name.
pub fn list_fixtures(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let entries = std::fs::read_dir(dir).map_err(|source| CliError::Read {
        path: dir.display().to_string(),
        source,
    })?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry
            .map_err(|source| CliError::Read {
                path: dir.display().to_string(),
                source,
            })?
            .path();
        let is_json = path.extension().is_some_and(|e| e == "json");
        let is_manifest = path.file_name().is_some_and(|n| n == MANIFEST_FILE);
        if path.is_file() && is_json && !is_manifest {
            files.push(path);
        }
    }
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(files)
}

pub fn load_fixture(path: &Path) -> Result<RawTicketImage, CliError> {
    parse_json(&read_file(path)?, path)
}

type FileResult = Result<Vec<(ProcessOutcome, Option<SampleEval>)>, FixtureFailure>;

fn process_file(path: &Path, cfg: &PipelineConfig, backends: &BackendSet) -> FileResult {
    let name = path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned());
    let fail = |message: String| FixtureFailure {
        file: name.clone(),
        message,
    };
    let img = load_fixture(path).map_err(|e| fail(e.to_string()))?;
    let truth = img.ground_truth.as_ref().map(|g| g.fields.clone()).filter(|f| !f.is_empty());
    let outcomes = process_ticket(&img, cfg, backends).map_err(|e| fail(e.to_string()))?;
    Ok(outcomes
        .into_iter()
        .map(|o| {
            let eval = truth.as_ref().map(|t| evaluate_fields(&o.record, t));
            (o, eval)
        })
        .collect())
}

/// Process `files` in parallel; results keep the order of `files`.
pub fn run_batch(files: &[PathBuf], cfg: &PipelineConfig) -> BatchRun {
    let backends = BackendSet::from_config(&cfg.backends, cfg);
    let results: Vec<FileResult> = files.par_iter().map(|f| process_file(f, cfg, &backends)).collect();
    let mut run = BatchRun {
        outcomes: Vec::new(),
        evals: Vec::new(),
        failures: Vec::new(),
        summary: BatchSummary {
            files: files.len(),
            ..BatchSummary::default()
        },
    };
    for r in results {
        match r {
            Ok(items) => {
                for (o, eval) in items {
                    match o.status {
                        OutcomeStatus::Accepted => run.summary.accepted += 1,
                        OutcomeStatus::NeedsAudit => run.summary.diverted += 1,
                    }
                    run.evals.extend(eval);
                    run.outcomes.push(o);
                }
            }
            Err(f) => run.failures.push(f),
        }
    }
    run.summary.tickets = run.outcomes.len();
    run.summary.fixture_errors = run.failures.len();
    run.summary.p_char = p_char(&run.evals).ok();
    run.summary.p_ticket = p_ticket(&run.evals).ok();
    run
}

impl BatchSummary {
    pub fn to_text(&self) -> String {
        let pct = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |v| format!("{:.4}", v));
        format!(
            "files {}  tickets {}  accepted {}  diverted {}  fixture errors {}  p_char {}  p_ticket {}",
            self.files,
            self.tickets,
            self.accepted,
            self.diverted,
            self.fixture_errors,
            pct(self.p_char),
            pct(self.p_ticket)
        )
    }
}
