//! Text structuring: turning positioned lines into a keyword → value map.
//!
//! Each line is searched for the field keywords. A match splits the line
//! into a left remainder, the keyword and a right remainder; the remainders
//! either become the value, are parked as fragments, or are searched again.
//! Keys left without a value are paired with fragments and unmatched lines
//! by position in [`resolve_positions`].

mod fuzzy;
mod resolve;

pub use fuzzy::{
    edit_distance, fuzzy_match_keyword, match_threshold, normalize_separators, normalize_with_offsets, KeywordMatch,
};
pub use resolve::{placement, reading_order, resolve_positions, Candidate, Resolution, ResolvedPair, ROW_BAND};

use crate::geometry::BBox;
use crate::types::{TextRegion, TicketType};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureInput {
    pub input_list: Vec<TextRegion>,
    pub keyword_list: Vec<String>,
    pub ticket_type: TicketType,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldValue {
    pub value: String,
    pub bbox: BBox,
}

/// Pending work left after splitting lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PendingItem {
    Key { keyword: String, bbox: BBox },
    Fragment { text: String, bbox: BBox },
}

/// What a run of characters in an input line was used for.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "role", content = "keyword", rename_all = "kebab-case")]
pub enum SpanRole {
    Keyword(String),
    Value(String),
    Fragment,
    Retained,
}

/// Characters `[start, end)` of input line `region`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub region: usize,
    pub start: usize,
    pub end: usize,
    pub role: SpanRole,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StructureResult {
    pub result_map: BTreeMap<String, FieldValue>,
    pub position_list: Vec<PendingItem>,
    pub unresolved: Vec<String>,
    /// Lines (or line remainders) without any keyword.
    pub retained: Vec<Candidate>,
    pub trace: Vec<Span>,
}

fn is_trim(c: char) -> bool {
    c.is_whitespace() || c == ':' || c == '：'
}

fn trimmed(chars: &[char]) -> String {
    let s: String = chars.iter().collect();
    s.trim_matches(is_trim).to_string()
}

struct Splitter<'a> {
    keywords: &'a [String],
    used: BTreeSet<usize>,
    out: StructureResult,
}

impl Splitter<'_> {
    /// Earliest match among unused keywords; ties prefer the closer match,
    /// then the longer keyword, then list order.
    fn best_match(&self, seg: &str, skip: Option<usize>) -> Option<(usize, KeywordMatch)> {
        self.keywords
            .iter()
            .enumerate()
            .filter(|(i, _)| !self.used.contains(i) && Some(*i) != skip)
            .filter_map(|(i, kw)| fuzzy_match_keyword(seg, kw).map(|m| (i, m)))
            .min_by_key(|(i, m)| (m.start, m.edit_distance, std::cmp::Reverse(self.keywords[*i].chars().count()), *i))
    }

    fn span(&mut self, region: usize, start: usize, end: usize, role: SpanRole) {
        if end > start {
            self.out.trace.push(Span {
                region,
                start,
                end,
                role,
            });
        }
    }

    fn line(&mut self, ri: usize, region: &TextRegion) {
        let chars: Vec<char> = region.text.chars().collect();
        self.segment(ri, region, &chars, 0, chars.len());
    }

    fn segment(&mut self, ri: usize, region: &TextRegion, chars: &[char], lo: usize, hi: usize) {
        let n = chars.len();
        let slice = |a: usize, b: usize| {
            if a == 0 && b == n {
                region.bbox
            } else {
                region.bbox.char_slice(a, b, n)
            }
        };
        let seg: String = chars[lo..hi].iter().collect();
        let Some((ki, m)) = self.best_match(&seg, None) else {
            self.span(ri, lo, hi, SpanRole::Retained);
            let text = trimmed(&chars[lo..hi]);
            if !text.is_empty() {
                self.out.retained.push(Candidate {
                    text,
                    bbox: slice(lo, hi),
                });
            }
            return;
        };
        let keyword = self.keywords[ki].clone();
        let (core_s, core_e) = (lo + m.start, lo + m.end);
        let mut ks = core_s;
        while ks > lo && is_trim(chars[ks - 1]) {
            ks -= 1;
        }
        let mut ke = core_e;
        while ke < hi && is_trim(chars[ke]) {
            ke += 1;
        }
        let key_box = slice(core_s, core_e);

        // (a) text before the keyword: park it and carry on with the rest
        if ks > lo {
            let text = trimmed(&chars[lo..ks]);
            self.span(ri, lo, ks, SpanRole::Fragment);
            self.out.position_list.push(PendingItem::Fragment {
                text,
                bbox: slice(lo, ks),
            });
            self.segment(ri, region, chars, ks, hi);
            return;
        }
        self.used.insert(ki);
        if ke < hi {
            let right: String = chars[ke..hi].iter().collect();
            // (b) another keyword follows: the value must be found elsewhere
            if self.best_match(&right, Some(ki)).is_some() {
                self.span(ri, lo, ke, SpanRole::Keyword(keyword.clone()));
                self.out.position_list.push(PendingItem::Key { keyword, bbox: key_box });
                self.segment(ri, region, chars, ke, hi);
                return;
            }
            // (c) the rest of the line is the value
            self.span(ri, lo, ke, SpanRole::Keyword(keyword.clone()));
            self.span(ri, ke, hi, SpanRole::Value(keyword.clone()));
            self.out.result_map.insert(
                keyword,
                FieldValue {
                    value: trimmed(&chars[ke..hi]),
                    bbox: slice(ke, hi),
                },
            );
            return;
        }
        // (d) the line holds only the keyword
        self.span(ri, lo, hi, SpanRole::Keyword(keyword.clone()));
        self.out.position_list.push(PendingItem::Key { keyword, bbox: key_box });
    }
}

/// First pass only: split lines around keywords without pairing by position.
pub fn split_fields(input: &StructureInput) -> StructureResult {
    let mut sp = Splitter {
        keywords: &input.keyword_list,
        used: BTreeSet::new(),
        out: StructureResult::default(),
    };
    if input.ticket_type != TicketType::III {
        return sp.out;
    }
    for (ri, region) in input.input_list.iter().enumerate() {
        sp.line(ri, region);
    }
    sp.out
}

/// Split lines around keywords, then pair waiting keys with fragments and
/// unmatched lines by position. Fixed-form tickets arrive already
/// structured, so anything other than type III comes back empty.
pub fn structure_fields(input: &StructureInput) -> StructureResult {
    let mut res = split_fields(input);
    let keys: Vec<(String, BBox)> = res
        .position_list
        .iter()
        .filter_map(|p| match p {
            PendingItem::Key { keyword, bbox } => Some((keyword.clone(), *bbox)),
            _ => None,
        })
        .collect();
    if keys.is_empty() {
        return res;
    }
    // candidate pool: fragments first, then unmatched lines
    let fragments: Vec<Candidate> = res
        .position_list
        .iter()
        .filter_map(|p| match p {
            PendingItem::Fragment { text, bbox } => Some(Candidate {
                text: text.clone(),
                bbox: *bbox,
            }),
            _ => None,
        })
        .collect();
    let n_frag = fragments.len();
    let pool: Vec<Candidate> = fragments.into_iter().chain(res.retained.iter().cloned()).collect();
    let resolution = resolve_positions(&keys, &pool);
    let consumed: BTreeSet<usize> = resolution.pairs.iter().map(|p| p.candidate).collect();
    for pair in resolution.pairs {
        res.result_map.insert(
            pair.keyword,
            FieldValue {
                value: pair.value,
                bbox: pair.bbox,
            },
        );
    }
    let mut frag_idx = 0;
    res.position_list.retain(|p| match p {
        PendingItem::Key { .. } => false,
        PendingItem::Fragment { .. } => {
            let keep = !consumed.contains(&frag_idx);
            frag_idx += 1;
            keep
        }
    });
    let mut line_idx = n_frag;
    res.retained.retain(|_| {
        let keep = !consumed.contains(&line_idx);
        line_idx += 1;
        keep
    });
    res.unresolved = resolution.unresolved;
    res
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::RegionKind;

    fn input(lines: &[(&str, BBox)], keywords: &[&str]) -> StructureInput {
        StructureInput {
            input_list: lines
                .iter()
                .map(|(t, b)| TextRegion::new(*b, *t, 1.0, RegionKind::FreeText))
                .collect(),
            keyword_list: keywords.iter().map(|s| s.to_string()).collect(),
            ticket_type: TicketType::III,
        }
    }

    #[test]
    fn inline_value() {
        let r = structure_fields(&input(&[("Amount:100.00", BBox::new(0.0, 0.0, 130.0, 20.0))], &["Amount"]));
        assert_eq!(r.result_map["Amount"].value, "100.00");
        assert_eq!(r.result_map["Amount"].bbox, BBox::new(70.0, 0.0, 60.0, 20.0));
        assert!(r.position_list.is_empty());
    }

    #[test]
    fn lone_keyword_waits() {
        let r = split_fields(&input(&[("Payer", BBox::new(0.0, 0.0, 50.0, 20.0))], &["Payer"]));
        assert!(r.result_map.is_empty());
        assert_eq!(
            r.position_list,
            vec![PendingItem::Key {
                keyword: "Payer".into(),
                bbox: BBox::new(0.0, 0.0, 50.0, 20.0)
            }]
        );
        let resolved = structure_fields(&input(&[("Payer", BBox::new(0.0, 0.0, 50.0, 20.0))], &["Payer"]));
        assert_eq!(resolved.unresolved, vec!["Payer".to_string()]);
    }

    #[test]
    fn two_keywords_on_one_line() {
        let line = "Payer:ACME Co Payee:Zenith";
        let r = structure_fields(&input(&[(line, BBox::new(0.0, 0.0, 260.0, 20.0))], &["Payer", "Payee"]));
        assert_eq!(r.result_map["Payer"].value, "ACME Co");
        assert_eq!(r.result_map["Payee"].value, "Zenith");
        assert!(r.position_list.is_empty() && r.unresolved.is_empty());
    }

    #[test]
    fn non_type_three_is_left_alone() {
        let mut i = input(&[("Amount:1", BBox::new(0.0, 0.0, 10.0, 10.0))], &["Amount"]);
        i.ticket_type = TicketType::I;
        assert_eq!(structure_fields(&i), StructureResult::default());
    }

    #[test]
    fn trace_partitions_every_line() {
        let lines = [
            ("Payer:ACME Co Payee:Zenith", BBox::new(0.0, 0.0, 260.0, 20.0)),
            ("misc 77", BBox::new(0.0, 40.0, 70.0, 20.0)),
            ("lead Amount: 9", BBox::new(0.0, 80.0, 140.0, 20.0)),
        ];
        let r = split_fields(&input(&lines, &["Payer", "Payee", "Amount"]));
        for (ri, (text, _)) in lines.iter().enumerate() {
            let mut spans: Vec<&Span> = r.trace.iter().filter(|s| s.region == ri).collect();
            spans.sort_by_key(|s| s.start);
            let mut at = 0;
            for s in spans {
                assert_eq!(s.start, at);
                at = s.end;
            }
            assert_eq!(at, text.chars().count());
        }
    }
}
