//! Pipeline configuration: thresholds, rotation parameters, the category
//! registry and the accounting-entry tables.

use crate::recognize::{BackendConfig, NoiseModel};
use crate::types::TicketType;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

const SHIPPED_REGISTRY: &str = include_str!("../data/registry.json");
const SHIPPED_RULES: &str = include_str!("../data/entry_rules.json");
const SHIPPED_SUBJECTS: &str = include_str!("../data/subjects.json");

/// Number of accounting subjects an entry table must declare.
pub const SUBJECT_COUNT: usize = 34;
/// Fallback subject when nothing matches.
pub const OTHERS_SUBJECT: &str = "others";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("threshold {name} = {value} must lie in (0, 1]")]
    Threshold { name: &'static str, value: f64 },
    #[error("n_class must be positive")]
    ClassCount,
    #[error("theta_deg {theta} does not equal 360 / n_class ({n_class})")]
    Theta { theta: f64, n_class: u32 },
    #[error("category {0:?}: {1}")]
    Category(String, String),
    #[error("entry rule {pattern:?} maps to unknown subject {subject:?}")]
    UnknownSubject { pattern: String, subject: String },
    #[error("subject list has {0} entries, expected {SUBJECT_COUNT}")]
    SubjectCount(usize),
    #[error("scarce_min_count must be positive")]
    ScarceCount,
    #[error("noise parameter {0} out of range")]
    Noise(&'static str),
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parsing {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

/// One registry entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryInfo {
    #[serde(rename = "type")]
    pub ticket_type: TicketType,
    pub title_keyword: String,
    pub field_keywords: Vec<String>,
    /// Large-vocabulary field recognised by segment-and-classify (type II only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name_field: Option<String>,
}

/// Category label to routing type and lexicon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct CategoryRegistry {
    pub categories: BTreeMap<String, CategoryInfo>,
}

impl CategoryRegistry {
    pub fn shipped() -> Self {
        serde_json::from_str(SHIPPED_REGISTRY).expect("shipped registry is valid JSON")
    }

    pub fn get(&self, category: &str) -> Option<&CategoryInfo> {
        self.categories.get(category)
    }

    pub fn contains(&self, category: &str) -> bool {
        self.categories.contains_key(category)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &CategoryInfo)> {
        self.categories.iter()
    }

    pub fn insert(&mut self, category: impl Into<String>, info: CategoryInfo) {
        self.categories.insert(category.into(), info);
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, info) in &self.categories {
            let bad = |msg: &str| ConfigError::Category(name.clone(), msg.to_string());
            if info.title_keyword.trim().is_empty() {
                return Err(bad("empty title keyword"));
            }
            if info.field_keywords.iter().any(|k| k.trim().is_empty()) {
                return Err(bad("empty field keyword"));
            }
            match (info.ticket_type, &info.name_field) {
                (TicketType::II, None) => return Err(bad("type II category needs a name_field")),
                (TicketType::II, Some(n)) if !info.field_keywords.contains(n) => {
                    return Err(bad("name_field must be one of field_keywords"))
                }
                (TicketType::III, _) if info.field_keywords.is_empty() => {
                    return Err(bad("type III category needs field keywords"))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryRule {
    pub pattern: String,
    pub subject: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EntryConfig {
    pub rules: Vec<EntryRule>,
    pub subjects: Vec<String>,
    /// Fields consulted, in order, as the transaction-detail text for rules.
    pub detail_fields: Vec<String>,
    /// Field order used to build classifier input text.
    pub field_order: Vec<String>,
}

impl Default for EntryConfig {
    fn default() -> Self {
        Self {
            rules: serde_json::from_str(SHIPPED_RULES).expect("shipped rules are valid JSON"),
            subjects: serde_json::from_str(SHIPPED_SUBJECTS).expect("shipped subjects are valid JSON"),
            detail_fields: vec!["Details".into(), "Purpose".into()],
            field_order: [
                "Seller", "Buyer", "Code", "Number", "Check Code", "Type", "Summary", "Details", "Date",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        }
    }
}

impl EntryConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.subjects.len() != SUBJECT_COUNT {
            return Err(ConfigError::SubjectCount(self.subjects.len()));
        }
        for rule in &self.rules {
            if !self.subjects.iter().any(|s| s == &rule.subject) {
                return Err(ConfigError::UnknownSubject {
                    pattern: rule.pattern.clone(),
                    subject: rule.subject.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn is_subject(&self, subject: &str) -> bool {
        subject == OTHERS_SUBJECT || self.subjects.iter().any(|s| s == subject)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub tau_class: f64,
    pub tau_recog: f64,
    pub tau_entry: f64,
    pub n_class: u32,
    /// Optional; when present it must equal `360 / n_class`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_deg: Option<f64>,
    pub category_registry: CategoryRegistry,
    pub entry: EntryConfig,
    pub scarce_min_count: usize,
    pub noise: NoiseModel,
    pub backends: BackendConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            tau_class: 0.98,
            tau_recog: 0.95,
            tau_entry: 0.90,
            n_class: 8,
            theta_deg: None,
            category_registry: CategoryRegistry::shipped(),
            entry: EntryConfig::default(),
            scarce_min_count: 50,
            noise: NoiseModel::identity(0),
            backends: BackendConfig::default(),
        }
    }
}

impl PipelineConfig {
    /// Angular width of one rotation class.
    pub fn theta_deg(&self) -> f64 {
        360.0 / self.n_class as f64
    }

    pub fn with_n_class(mut self, n_class: u32) -> Self {
        self.n_class = n_class;
        self.theta_deg = None;
        self
    }

    pub fn threshold(&self, stage: crate::types::Stage) -> f64 {
        use crate::types::Stage;
        match stage {
            Stage::Rotation | Stage::Classification => self.tau_class,
            Stage::Recognition | Stage::Structuring => self.tau_recog,
            Stage::Entry => self.tau_entry,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, value) in [
            ("tau_class", self.tau_class),
            ("tau_recog", self.tau_recog),
            ("tau_entry", self.tau_entry),
        ] {
            if !(value > 0.0 && value <= 1.0) {
                return Err(ConfigError::Threshold { name, value });
            }
        }
        if self.n_class == 0 {
            return Err(ConfigError::ClassCount);
        }
        if let Some(theta) = self.theta_deg {
            if theta * self.n_class as f64 != 360.0 {
                return Err(ConfigError::Theta {
                    theta,
                    n_class: self.n_class,
                });
            }
        }
        if self.scarce_min_count == 0 {
            return Err(ConfigError::ScarceCount);
        }
        self.noise.validate()?;
        self.category_registry.validate()?;
        self.entry.validate()
    }

    pub fn from_json_str(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let cfg: PipelineConfig = serde_json::from_str(text).map_err(|source| ConfigError::Parse {
            path: origin.to_string(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_str(&text, &path.display().to_string())
    }
}

/// Read a JSON file into `T`, mapping errors to [`ConfigError`].
pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| ConfigError::Parse {
        path: path.display().to_string(),
        source,
    })
}
