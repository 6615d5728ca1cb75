//! Pairing keys that still await a value with nearby text by position.

use crate::geometry::BBox;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

/// Fraction of the key height within which centres count as the same row.
pub const ROW_BAND: f64 = 0.6;

/// Text that may serve as a value: a split-off fragment or an unmatched line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub text: String,
    pub bbox: BBox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedPair {
    pub keyword: String,
    pub value: String,
    pub bbox: BBox,
    /// Index into the candidate slice.
    pub candidate: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Resolution {
    pub pairs: Vec<ResolvedPair>,
    pub unresolved: Vec<String>,
}

/// Tier and in-tier gap of `cand` as a value for `key`:
/// tier 1 is same row to the right, tier 2 is below with horizontal overlap.
pub fn placement(key: &BBox, cand: &BBox) -> Option<(u8, f64)> {
    let (_, kcy) = key.center();
    let (_, ccy) = cand.center();
    if (ccy - kcy).abs() <= ROW_BAND * key.h && cand.x > key.x {
        return Some((1, (cand.x - key.right()).max(0.0)));
    }
    let gap = cand.y - key.bottom();
    let overlap = key.right().min(cand.right()) - key.x.max(cand.x);
    if gap > 0.0 && overlap > 0.0 {
        return Some((2, gap));
    }
    None
}

fn center_distance(a: &BBox, b: &BBox) -> f64 {
    let (ax, ay) = a.center();
    let (bx, by) = b.center();
    (ax - bx).hypot(ay - by)
}

/// Top-to-bottom, then left-to-right.
pub fn reading_order(a: &BBox, b: &BBox) -> Ordering {
    a.y.total_cmp(&b.y).then(a.x.total_cmp(&b.x))
}

/// Greedy assignment: keys in reading order each take their best remaining
/// candidate (tier, then gap, then centre distance, then reading order).
pub fn resolve_positions(keys: &[(String, BBox)], candidates: &[Candidate]) -> Resolution {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| reading_order(&keys[a].1, &keys[b].1).then(a.cmp(&b)));
    let mut used = vec![false; candidates.len()];
    let mut out = Resolution::default();
    for ki in order {
        let (kw, kb) = &keys[ki];
        let best = candidates
            .iter()
            .enumerate()
            .filter(|(ci, _)| !used[*ci])
            .filter_map(|(ci, c)| placement(kb, &c.bbox).map(|(tier, gap)| (ci, tier, gap, center_distance(kb, &c.bbox))))
            .min_by(|a, b| {
                a.1.cmp(&b.1)
                    .then(a.2.total_cmp(&b.2))
                    .then(a.3.total_cmp(&b.3))
                    .then(reading_order(&candidates[a.0].bbox, &candidates[b.0].bbox))
                    .then(a.0.cmp(&b.0))
            });
        match best {
            Some((ci, ..)) => {
                used[ci] = true;
                out.pairs.push(ResolvedPair {
                    keyword: kw.clone(),
                    value: candidates[ci].text.clone(),
                    bbox: candidates[ci].bbox,
                    candidate: ci,
                });
            }
            None => out.unresolved.push(kw.clone()),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cand(x: f64, y: f64, w: f64, h: f64, t: &str) -> Candidate {
        Candidate {
            text: t.into(),
            bbox: BBox::new(x, y, w, h),
        }
    }

    #[test]
    fn same_row_beats_below() {
        let keys = vec![("Amount".to_string(), BBox::new(100.0, 200.0, 60.0, 20.0))];
        let cands = vec![cand(180.0, 202.0, 80.0, 20.0, "42.00"), cand(100.0, 400.0, 80.0, 20.0, "X")];
        let r = resolve_positions(&keys, &cands);
        assert_eq!(r.pairs[0].value, "42.00");
        assert_eq!(placement(&keys[0].1, &cands[0].bbox), Some((1, 20.0)));
        assert_eq!(placement(&keys[0].1, &cands[1].bbox), Some((2, 180.0)));
    }

    #[test]
    fn value_below_is_used() {
        let keys = vec![("Date".to_string(), BBox::new(100.0, 200.0, 60.0, 20.0))];
        let cands = vec![cand(105.0, 230.0, 80.0, 20.0, "2019-01-01")];
        let r = resolve_positions(&keys, &cands);
        assert_eq!(r.pairs[0].value, "2019-01-01");
        assert_eq!(placement(&keys[0].1, &cands[0].bbox), Some((2, 10.0)));
    }

    #[test]
    fn no_candidates_leaves_key_unresolved() {
        let keys = vec![("Payer".to_string(), BBox::new(0.0, 0.0, 10.0, 10.0))];
        let r = resolve_positions(&keys, &[]);
        assert!(r.pairs.is_empty());
        assert_eq!(r.unresolved, vec!["Payer".to_string()]);
    }

    #[test]
    fn candidate_consumed_once() {
        let keys = vec![
            ("A".to_string(), BBox::new(0.0, 0.0, 20.0, 10.0)),
            ("B".to_string(), BBox::new(0.0, 40.0, 20.0, 10.0)),
        ];
        // only candidate sits to the right of A and below... nothing for B
        let cands = vec![cand(30.0, 0.0, 20.0, 10.0, "v")];
        let r = resolve_positions(&keys, &cands);
        assert_eq!(r.pairs.len(), 1);
        assert_eq!(r.pairs[0].keyword, "A");
        assert_eq!(r.unresolved, vec!["B".to_string()]);
    }
}
