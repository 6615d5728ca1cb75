//! Accounting-entry assignment: rule table baseline plus a pluggable classifier.

use crate::config::{EntryConfig, OTHERS_SUBJECT};
use crate::recognize::BackendError;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub trait EntryClassifier: Send + Sync {
    /// Subject and confidence for the concatenated field text.
    fn predict(&self, text: &str) -> Result<(String, f64), BackendError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryDecision {
    pub subject: String,
    pub confidence: f64,
    pub needs_audit: bool,
}

/// Text the rules are matched against: the first configured detail field
/// present, otherwise the category name.
pub fn detail_text<'a>(fields: &'a BTreeMap<String, String>, category: &'a str, cfg: &EntryConfig) -> &'a str {
    cfg.detail_fields
        .iter()
        .find_map(|f| fields.get(f))
        .map(String::as_str)
        .unwrap_or(category)
}

/// Classifier input: fields in the configured order, then the rest by name.
pub fn classifier_input(fields: &BTreeMap<String, String>, cfg: &EntryConfig) -> String {
    let mut parts: Vec<&str> = cfg
        .field_order
        .iter()
        .filter_map(|f| fields.get(f).map(String::as_str))
        .collect();
    parts.extend(
        fields
            .iter()
            .filter(|(k, _)| !cfg.field_order.contains(k))
            .map(|(_, v)| v.as_str()),
    );
    parts.join(" ")
}

/// First rule whose pattern occurs in the detail text; "others" when none does.
pub fn classify_entry_rules(fields: &BTreeMap<String, String>, category: &str, cfg: &EntryConfig) -> EntryDecision {
    let detail = detail_text(fields, category, cfg);
    match cfg.rules.iter().find(|r| detail.contains(r.pattern.as_str())) {
        Some(rule) => EntryDecision {
            subject: rule.subject.clone(),
            confidence: 1.0,
            needs_audit: false,
        },
        None => EntryDecision {
            subject: OTHERS_SUBJECT.to_string(),
            confidence: 0.0,
            needs_audit: true,
        },
    }
}

/// Rule table when `classifier` is `None`, otherwise the classifier gated on
/// `tau_entry`. Subjects outside the configured list are sent to audit.
pub fn classify_entry(
    fields: &BTreeMap<String, String>,
    category: &str,
    classifier: Option<&dyn EntryClassifier>,
    cfg: &EntryConfig,
    tau_entry: f64,
) -> Result<EntryDecision, BackendError> {
    let Some(classifier) = classifier else {
        return Ok(classify_entry_rules(fields, category, cfg));
    };
    let (subject, confidence) = classifier.predict(&classifier_input(fields, cfg))?;
    let known = cfg.is_subject(&subject);
    Ok(EntryDecision {
        needs_audit: !known || confidence < tau_entry,
        subject: if known { subject } else { OTHERS_SUBJECT.to_string() },
        confidence: if known { confidence } else { 0.0 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::EntryRule;

    fn fields(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    struct Fixed(&'static str, f64);
    impl EntryClassifier for Fixed {
        fn predict(&self, _: &str) -> Result<(String, f64), BackendError> {
            Ok((self.0.to_string(), self.1))
        }
    }

    #[test]
    fn rule_hit() {
        let cfg = EntryConfig::default();
        let d = classify_entry_rules(&fields(&[("Details", "printer paper A4")]), "VAT ticket", &cfg);
        assert_eq!((d.subject.as_str(), d.confidence, d.needs_audit), ("office expenses", 1.0, false));
    }

    #[test]
    fn rule_miss_falls_back_to_others() {
        let cfg = EntryConfig::default();
        let d = classify_entry_rules(&fields(&[("Details", "quantum flux capacitor")]), "VAT ticket", &cfg);
        assert_eq!((d.subject.as_str(), d.confidence, d.needs_audit), ("others", 0.0, true));
    }

    #[test]
    fn category_name_used_without_detail_field() {
        let cfg = EntryConfig::default();
        let d = classify_entry_rules(&fields(&[("Fare", "23.00")]), "taxi ticket", &cfg);
        assert_eq!(d.subject, "travel expenses");
    }

    #[test]
    fn classifier_gated_on_tau_entry() {
        let cfg = EntryConfig::default();
        let f = fields(&[("Details", "x")]);
        let low = classify_entry(&f, "VAT ticket", Some(&Fixed("travel expenses", 0.80)), &cfg, 0.90).unwrap();
        assert!(low.needs_audit);
        let high = classify_entry(&f, "VAT ticket", Some(&Fixed("travel expenses", 0.95)), &cfg, 0.90).unwrap();
        assert!(!high.needs_audit);
        let alien = classify_entry(&f, "VAT ticket", Some(&Fixed("space travel", 0.99)), &cfg, 0.90).unwrap();
        assert_eq!(alien.subject, "others");
        assert!(alien.needs_audit);
    }

    #[test]
    fn earlier_rule_wins_on_overlap() {
        let mut cfg = EntryConfig::default();
        cfg.rules = vec![
            EntryRule {
                pattern: "paper".into(),
                subject: "printing expenses".into(),
            },
            EntryRule {
                pattern: "printer paper".into(),
                subject: "office expenses".into(),
            },
        ];
        let d = classify_entry_rules(&fields(&[("Details", "printer paper")]), "VAT ticket", &cfg);
        assert_eq!(d.subject, "printing expenses");
    }

    #[test]
    fn classifier_input_order() {
        let cfg = EntryConfig::default();
        let f = fields(&[("Date", "d"), ("Seller", "s"), ("Zeta", "z"), ("Alpha", "a")]);
        assert_eq!(classifier_input(&f, &cfg), "s d a z");
    }
}
