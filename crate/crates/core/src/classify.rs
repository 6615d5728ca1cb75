//! Category classification, confidence gating and title-keyword cross-checks.

use crate::config::PipelineConfig;
use crate::preprocess::RawTicketImage;
use crate::recognize::BackendError;
use crate::structure::fuzzy_match_keyword;
use crate::types::{TextRegion, TicketType};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifyError {
    #[error("category {0:?} is not in the registry")]
    UnknownCategory(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryPrediction {
    pub category: String,
    pub confidence: f64,
}

pub trait TicketClassifier: Send + Sync {
    fn predict(&self, ticket: &RawTicketImage) -> Result<CategoryPrediction, BackendError>;
    fn known_categories(&self) -> BTreeSet<String>;
}

/// Reports the fixture's ground-truth category with its recorded confidence
/// (1.0 when the fixture does not set one).
#[derive(Debug, Clone, Default)]
pub struct FixtureTicketClassifier {
    known: BTreeSet<String>,
}

impl FixtureTicketClassifier {
    pub fn new(known: BTreeSet<String>) -> Self {
        Self { known }
    }
}

impl TicketClassifier for FixtureTicketClassifier {
    fn predict(&self, ticket: &RawTicketImage) -> Result<CategoryPrediction, BackendError> {
        let gt = ticket
            .ground_truth
            .as_ref()
            .ok_or_else(|| BackendError::Failure("ticket carries no ground truth".into()))?;
        Ok(CategoryPrediction {
            category: gt.category.clone(),
            confidence: gt.class_conf.unwrap_or(1.0),
        })
    }

    fn known_categories(&self) -> BTreeSet<String> {
        self.known.clone()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClassifyDecision {
    Accepted(CategoryPrediction),
    NeedsAudit {
        prediction: CategoryPrediction,
        /// The label is absent from the registry.
        unfamiliar: bool,
    },
}

impl ClassifyDecision {
    pub fn prediction(&self) -> &CategoryPrediction {
        match self {
            ClassifyDecision::Accepted(p) => p,
            ClassifyDecision::NeedsAudit { prediction, .. } => prediction,
        }
    }

    pub fn is_accepted(&self) -> bool {
        matches!(self, ClassifyDecision::Accepted(_))
    }
}

/// Accept iff the confidence reaches `tau_class` and the label is registered.
pub fn classify_ticket(prediction: CategoryPrediction, cfg: &PipelineConfig) -> ClassifyDecision {
    let unfamiliar = !cfg.category_registry.contains(&prediction.category);
    if unfamiliar || prediction.confidence < cfg.tau_class {
        ClassifyDecision::NeedsAudit { prediction, unfamiliar }
    } else {
        ClassifyDecision::Accepted(prediction)
    }
}

pub fn route_ticket_type(category: &str, cfg: &PipelineConfig) -> Result<TicketType, ClassifyError> {
    cfg.category_registry
        .get(category)
        .map(|c| c.ticket_type)
        .ok_or_else(|| ClassifyError::UnknownCategory(category.to_string()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "lowercase")]
pub enum KeywordCheck {
    Consistent,
    /// Recognised text names a different category's title.
    Mismatch { found: String },
    Inconclusive,
}

/// Second-pass check of a classification against the recognised title text.
pub fn cross_validate_keywords(category: &str, regions: &[TextRegion], cfg: &PipelineConfig) -> KeywordCheck {
    let hit = |title: &str| regions.iter().any(|r| fuzzy_match_keyword(&r.text, title).is_some());
    if let Some(info) = cfg.category_registry.get(category) {
        if hit(&info.title_keyword) {
            return KeywordCheck::Consistent;
        }
    }
    cfg.category_registry
        .iter()
        .filter(|(name, _)| name.as_str() != category)
        .find(|(_, info)| hit(&info.title_keyword))
        .map(|(name, _)| KeywordCheck::Mismatch { found: name.clone() })
        .unwrap_or(KeywordCheck::Inconclusive)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BBox;
    use crate::types::RegionKind;

    fn pred(c: &str, p: f64) -> CategoryPrediction {
        CategoryPrediction {
            category: c.into(),
            confidence: p,
        }
    }

    fn line(t: &str) -> TextRegion {
        TextRegion::new(BBox::new(0.0, 0.0, 100.0, 20.0), t, 1.0, RegionKind::FreeText)
    }

    #[test]
    fn gate_on_tau_class() {
        let cfg = PipelineConfig::default();
        assert!(classify_ticket(pred("VAT ticket", 0.99), &cfg).is_accepted());
        assert!(!classify_ticket(pred("VAT ticket", 0.97), &cfg).is_accepted());
        assert_eq!(
            classify_ticket(pred("lottery stub", 1.0), &cfg),
            ClassifyDecision::NeedsAudit {
                prediction: pred("lottery stub", 1.0),
                unfamiliar: true
            }
        );
    }

    #[test]
    fn routing() {
        let cfg = PipelineConfig::default();
        for c in ["VAT ticket", "quota ticket", "taxi ticket"] {
            assert_eq!(route_ticket_type(c, &cfg).unwrap(), TicketType::I);
        }
        assert_eq!(route_ticket_type("train ticket", &cfg).unwrap(), TicketType::II);
        assert_eq!(route_ticket_type("bank receipt", &cfg).unwrap(), TicketType::III);
        assert!(matches!(
            route_ticket_type("lottery stub", &cfg),
            Err(ClassifyError::UnknownCategory(_))
        ));
    }

    #[test]
    fn keyword_cross_check() {
        let cfg = PipelineConfig::default();
        let vat = &cfg.category_registry.get("VAT ticket").unwrap().title_keyword;
        let train = &cfg.category_registry.get("train ticket").unwrap().title_keyword;
        assert_eq!(cross_validate_keywords("VAT ticket", &[line(vat)], &cfg), KeywordCheck::Consistent);
        assert_eq!(
            cross_validate_keywords("quota ticket", &[line(train)], &cfg),
            KeywordCheck::Mismatch {
                found: "train ticket".into()
            }
        );
        assert_eq!(cross_validate_keywords("quota ticket", &[line("12.50")], &cfg), KeywordCheck::Inconclusive);
    }

    #[test]
    fn shipped_titles_do_not_collide() {
        let cfg = PipelineConfig::default();
        for (a, ia) in cfg.category_registry.iter() {
            for (b, ib) in cfg.category_registry.iter() {
                let m = fuzzy_match_keyword(&ia.title_keyword, &ib.title_keyword).is_some();
                assert_eq!(m, a == b, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn titles_do_not_trip_field_keywords() {
        let cfg = PipelineConfig::default();
        for (name, info) in cfg.category_registry.iter() {
            for kw in &info.field_keywords {
                assert!(fuzzy_match_keyword(&info.title_keyword, kw).is_none(), "{name}: {kw}");
            }
        }
    }
}
