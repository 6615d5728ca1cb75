use super::fixture::{FixtureCharClassifier, FixtureCharSegmenter, FixtureKeywordDetector, FixtureLineDetector};
use super::{CharClassifier, CharSegmenter, KeywordFieldDetector, TextLineDetector};
use crate::classify::{FixtureTicketClassifier, TicketClassifier};
use crate::config::PipelineConfig;
use crate::entry::EntryClassifier;
use crate::preprocess::{HoughOrientationClassifier, OracleRotationClassifier, RotationClassifier};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RotationBackend {
    /// Reads the rotation recorded in fixture ground truth.
    Fixture,
    /// Hough-transform baseline over the edge raster.
    Hough {
        #[serde(default = "one")]
        angle_res_deg: f64,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FixtureOnly {
    Fixture,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EntryBackend {
    /// Ordered substring rules from the entry configuration.
    Rules,
}

/// Which implementation serves each backend interface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendConfig {
    pub rotation: RotationBackend,
    pub classifier: FixtureOnly,
    pub keyword_detector: FixtureOnly,
    pub line_detector: FixtureOnly,
    pub segmenter: FixtureOnly,
    pub char_classifier: FixtureOnly,
    pub entry: EntryBackend,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            rotation: RotationBackend::Fixture,
            classifier: FixtureOnly::Fixture,
            keyword_detector: FixtureOnly::Fixture,
            line_detector: FixtureOnly::Fixture,
            segmenter: FixtureOnly::Fixture,
            char_classifier: FixtureOnly::Fixture,
            entry: EntryBackend::Rules,
        }
    }
}

/// Shared handles to every backend the pipeline may call.
#[derive(Clone)]
pub struct BackendSet {
    pub rotation: Arc<dyn RotationClassifier>,
    pub classifier: Arc<dyn TicketClassifier>,
    pub keyword_detector: Arc<dyn KeywordFieldDetector>,
    pub line_detector: Arc<dyn TextLineDetector>,
    pub segmenter: Arc<dyn CharSegmenter>,
    pub char_classifier: Arc<dyn CharClassifier>,
    /// `None` selects the rule table.
    pub entry_classifier: Option<Arc<dyn EntryClassifier>>,
}

impl BackendSet {
    /// Fixture-backed set for `cfg`, rotation read from ground truth.
    pub fn fixture(cfg: &PipelineConfig) -> Self {
        Self::from_config(&BackendConfig::default(), cfg)
    }

    pub fn from_config(backends: &BackendConfig, cfg: &PipelineConfig) -> Self {
        let rotation: Arc<dyn RotationClassifier> = match backends.rotation {
            RotationBackend::Fixture => Arc::new(OracleRotationClassifier { n_class: cfg.n_class }),
            RotationBackend::Hough { angle_res_deg } => {
                let titles = cfg.category_registry.iter().map(|(_, c)| c.title_keyword.clone()).collect();
                let mut h = HoughOrientationClassifier::new(cfg.n_class, titles);
                h.angle_res_deg = angle_res_deg;
                Arc::new(h)
            }
        };
        Self {
            rotation,
            classifier: Arc::new(FixtureTicketClassifier::new(
                cfg.category_registry.iter().map(|(k, _)| k.clone()).collect(),
            )),
            keyword_detector: Arc::new(FixtureKeywordDetector),
            line_detector: Arc::new(FixtureLineDetector),
            segmenter: Arc::new(FixtureCharSegmenter),
            char_classifier: Arc::new(FixtureCharClassifier),
            entry_classifier: match backends.entry {
                EntryBackend::Rules => None,
            },
        }
    }
}

impl std::fmt::Debug for BackendSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BackendSet")
            .field("entry_classifier", &self.entry_classifier.is_some())
            .finish_non_exhaustive()
    }
}
