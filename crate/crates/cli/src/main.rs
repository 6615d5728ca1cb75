//! `ticketflow` command line.
//!
//! Machine-readable JSON goes to stdout, human-readable tables to stderr.
//! Exit status: 0 success, 1 unusable input or config, 2 when some fixtures
//! of a batch failed while the rest were processed.

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;
use ticketflow_cli::{
    gen_fixtures, list_fixtures, metrics_report, run_batch, run_bench, structure_file, BenchOptions, CliError,
    EXIT_FIXTURE_ERRORS, EXIT_UNUSABLE,
};
use ticketflow_core::PipelineConfig;
use ticketflow_service::ServiceConfig;

#[derive(Debug, Parser)]
#[command(name = "ticketflow", version, about = "Financial ticket recognition pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Process every fixture in a directory and write outcomes as JSON lines.
    Process {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Noise seed; overrides the one in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Generate a fixture corpus and its manifest.
    Gen {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Time type-routed against full-surface processing.
    Bench {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 3)]
        repeat: usize,
    },
    /// Structure a {regions, keywords} file into {fields, unresolved}.
    Structure {
        #[arg(long)]
        input: PathBuf,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Accuracy from evaluation lines and a cost fit from timing lines.
    Metrics {
        #[arg(long)]
        evals: Option<PathBuf>,
        #[arg(long)]
        timings: Option<PathBuf>,
    },
}

fn print_json<T: Serialize>(v: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Process {
            input,
            out,
            config,
            seed,
        } => {
            let mut cfg = PipelineConfig::from_path(&config).map_err(CliError::from)?;
            if let Some(seed) = seed {
                cfg.noise.seed = seed;
            }
            let files = list_fixtures(&input)?;
            let batch = run_batch(&files, &cfg);
            std::fs::write(&out, batch.to_jsonl()).with_context(|| format!("cannot write {}", out.display()))?;
            for f in &batch.failures {
                eprintln!("error: {}: {}", f.file, f.message);
            }
            eprintln!("{}", batch.summary.to_text());
            print_json(&batch.summary)?;
            Ok(if batch.failures.is_empty() { 0 } else { EXIT_FIXTURE_ERRORS })
        }
        Command::Gen { spec, out, seed } => {
            let g = gen_fixtures(&spec, &out, seed)?;
            for w in &g.warnings {
                eprintln!("warning: {w}");
            }
            print_json(&g.manifest)?;
            Ok(0)
        }
        Command::Bench { corpus, repeat } => {
            let files = list_fixtures(&corpus)?;
            if files.is_empty() {
                return Err(CliError::Input(format!("{} holds no fixtures", corpus.display())).into());
            }
            let report = run_bench(&files, &PipelineConfig::default(), BenchOptions { repeat })?;
            for f in &report.skipped {
                eprintln!("skipped: {}: {}", f.file, f.message);
            }
            eprint!("{}", report.to_text());
            print_json(&report)?;
            Ok(0)
        }
        Command::Structure { input } => {
            print_json(&structure_file(&input)?)?;
            Ok(0)
        }
        Command::Serve { config } => {
            let cfg = match config {
                Some(path) => ServiceConfig::from_path(&path)?,
                None => ServiceConfig::default(),
            }
            .with_env()?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(ticketflow_service::run(cfg))?;
            Ok(0)
        }
        Command::Metrics { evals, timings } => {
            let report = metrics_report(evals.as_deref(), timings.as_deref())?;
            eprint!("{}", report.to_text());
            print_json(&report)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_UNUSABLE as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_UNUSABLE as u8)
        }
    }
}
