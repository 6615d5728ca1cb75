//! Fixture corpus generation from a spec file.

use crate::{parse_json, read_file, write_file, CliError};
use std::path::Path;
use ticketflow_core::fixtures::{generate_corpus, GenSpec, Manifest};
use ticketflow_core::CategoryRegistry;

pub const MANIFEST_FILE: &str = crate::batch::MANIFEST_FILE;

#[derive(Debug, Clone)]
pub struct GenOutput {
    pub manifest: Manifest,
    pub warnings: Vec<String>,
}

/// Write one JSON file per fixture plus `manifest.json` into `out`.
pub fn gen_fixtures(spec_path: &Path, out: &Path, seed: u64) -> Result<GenOutput, CliError> {
    let spec: GenSpec = parse_json(&read_file(spec_path)?, spec_path).map_err(|e| CliError::Spec(e.to_string()))?;
    let corpus = generate_corpus(&spec, &CategoryRegistry::shipped(), seed).map_err(|e| CliError::Spec(e.to_string()))?;
    std::fs::create_dir_all(out).map_err(|source| CliError::Write {
        path: out.display().to_string(),
        source,
    })?;
    for (name, img) in &corpus.fixtures {
        let mut bytes = serde_json::to_vec(img).expect("fixtures serialize");
        bytes.push(b'\n');
        write_file(&out.join(name), &bytes)?;
    }
    let mut bytes = serde_json::to_vec_pretty(&corpus.manifest).expect("manifest serializes");
    bytes.push(b'\n');
    write_file(&out.join(MANIFEST_FILE), &bytes)?;
    Ok(GenOutput {
        manifest: corpus.manifest,
        warnings: corpus.warnings,
    })
}
