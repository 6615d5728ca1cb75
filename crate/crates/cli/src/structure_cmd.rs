//! Standalone text structuring over a JSON file.

use crate::{parse_json, read_file, CliError};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use ticketflow_core::structure::{structure_fields, FieldValue, StructureInput};
use ticketflow_core::{TextRegion, TicketType};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StandaloneInput {
    pub regions: Vec<TextRegion>,
    pub keywords: Vec<String>,
    /// Only type III tickets reach structuring in the pipeline.
    #[serde(default = "type_three")]
    pub ticket_type: TicketType,
}

fn type_three() -> TicketType {
    TicketType::III
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandaloneOutput {
    pub fields: BTreeMap<String, FieldValue>,
    pub unresolved: Vec<String>,
}

pub fn structure_input(input: StandaloneInput) -> StandaloneOutput {
    let res = structure_fields(&StructureInput {
        input_list: input.regions,
        keyword_list: input.keywords,
        ticket_type: input.ticket_type,
    });
    StandaloneOutput {
        fields: res.result_map,
        unresolved: res.unresolved,
    }
}

pub fn structure_file(path: &Path) -> Result<StandaloneOutput, CliError> {
    let input: StandaloneInput = parse_json(&read_file(path)?, path)?;
    Ok(structure_input(input))
}
