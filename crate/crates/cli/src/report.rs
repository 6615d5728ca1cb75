//! Accuracy and cost-model reports from evaluation and timing logs.

use crate::bench::CostFit;
use crate::{parse_json_lines, read_file, CliError};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;
use ticketflow_core::metrics::{fit_cost_model, p_char, p_ticket, SampleEval, TimingLogEntry};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    pub samples: usize,
    pub p_char: f64,
    pub p_ticket: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<Accuracy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_model: Option<CostFit>,
}

/// Accuracy over JSON lines of evaluations and a cost fit over JSON lines of
/// timings; either file may be omitted but not both.
pub fn metrics_report(evals: Option<&Path>, timings: Option<&Path>) -> Result<MetricsReport, CliError> {
    if evals.is_none() && timings.is_none() {
        return Err(CliError::Input("give --evals, --timings or both".into()));
    }
    let mut report = MetricsReport::default();
    if let Some(path) = evals {
        let samples: Vec<SampleEval> = parse_json_lines(&read_file(path)?, path)?;
        let bad = |e: ticketflow_core::metrics::MetricsError| CliError::Input(format!("{}: {e}", path.display()));
        report.accuracy = Some(Accuracy {
            samples: samples.len(),
            p_char: p_char(&samples).map_err(bad)?,
            p_ticket: p_ticket(&samples).map_err(bad)?,
        });
    }
    if let Some(path) = timings {
        let log: Vec<TimingLogEntry> = parse_json_lines(&read_file(path)?, path)?;
        report.cost_model = Some(CostFit::from(fit_cost_model(&log)));
    }
    Ok(report)
}

impl MetricsReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        if let Some(a) = &self.accuracy {
            let _ = writeln!(s, "samples {}  p_char {:.4}  p_ticket {:.4}", a.samples, a.p_char, a.p_ticket);
        }
        if let Some(c) = &self.cost_model {
            s.push_str(&c.to_text());
        }
        s
    }
}
