//! Library side of the `ticketflow` command: batch processing, fixture
//! generation, timing benchmarks, standalone structuring and metrics.

pub mod batch;
pub mod bench;
pub mod gen;
pub mod report;
pub mod structure_cmd;

use serde::de::DeserializeOwned;
use std::path::Path;
use thiserror::Error;

pub use batch::{list_fixtures, load_fixture, run_batch, BatchRun, BatchSummary, FixtureFailure};
pub use bench::{run_bench, BenchOptions, BenchReport, CostFit};
pub use gen::{gen_fixtures, GenOutput};
pub use report::{metrics_report, MetricsReport};
pub use structure_cmd::{structure_file, StandaloneInput, StandaloneOutput};

/// Errors that stop a subcommand; every one maps to exit status 1.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid config: {0}")]
    Config(#[from] ticketflow_core::ConfigError),
    #[error("invalid spec: {0}")]
    Spec(String),
    #[error("{0}")]
    Input(String),
}

/// Exit status for a failed or partly failed run.
pub const EXIT_UNUSABLE: i32 = 1;
pub const EXIT_FIXTURE_ERRORS: i32 = 2;

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|source| CliError::Read {
        path: path.display().to_string(),
        source,
    })
}

/// Parse JSON, naming the offending location on failure.
pub(crate) fn parse_json<T: DeserializeOwned>(bytes: &[u8], origin: &Path) -> Result<T, CliError> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    serde_path_to_error::deserialize(de).map_err(|e| CliError::Parse {
        path: origin.display().to_string(),
        message: format!("{}: {}", e.path(), e.inner()),
    })
}

/// Parse one JSON value per non-blank line.
pub(crate) fn parse_json_lines<T: DeserializeOwned>(bytes: &[u8], origin: &Path) -> Result<Vec<T>, CliError> {
    let text = std::str::from_utf8(bytes).map_err(|e| CliError::Parse {
        path: origin.display().to_string(),
        message: e.to_string(),
    })?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            parse_json(l.as_bytes(), origin).map_err(|e| match e {
                CliError::Parse { path, message } => CliError::Parse {
                    path: format!("{path}:{}", i + 1),
                    message,
                },
                other => other,
            })
        })
        .collect()
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|source| CliError::Write {
        path: path.display().to_string(),
        source,
    })
}
