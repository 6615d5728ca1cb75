//! Generated structuring layouts and a brute-force location-matching oracle.
//!
//! Layouts mix three kinds of lines on a jittered grid: a keyword alone
//! (waits for a value), an inline "Keyword:value" line, and a bare value.
//! The oracle knows which line is which from construction and enumerates
//! every injective assignment of waiting keys to value lines.

#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use ticketflow_core::structure::{fuzzy_match_keyword, StructureInput};
use ticketflow_core::{BBox, RegionKind, TextRegion, TicketType};

pub const VOCABULARY: [&str; 8] = [
    "Amount", "Payer", "Station", "Remarks", "Currency", "Operator", "Invoice No", "Total Tax",
];

const COLS: usize = 5;
const ROWS: usize = 6;
const CELL_W: f64 = 120.0;
const CELL_H: f64 = 40.0;

pub struct Layout {
    pub input: StructureInput,
    pub inline: BTreeMap<String, String>,
    pub keys: Vec<(String, BBox)>,
    pub values: Vec<(String, BBox)>,
}

/// A layout with at most `max_keywords` keywords and `max_regions` lines.
pub fn generate(rng: &mut impl Rng, max_keywords: usize, max_regions: usize) -> Layout {
    let n_regions = rng.random_range(1..=max_regions);
    let n_kw = rng.random_range(1..=max_keywords.min(n_regions));
    let mut vocab: Vec<&str> = VOCABULARY.to_vec();
    vocab.shuffle(rng);
    let keywords: Vec<String> = vocab[..n_kw].iter().map(|s| s.to_string()).collect();

    let mut cells: Vec<(usize, usize)> = (0..ROWS).flat_map(|r| (0..COLS).map(move |c| (r, c))).collect();
    cells.shuffle(rng);
    let place = |rng: &mut dyn rand::RngCore, chars: usize, i: usize| {
        let (row, col) = cells[i];
        let w = (chars as f64 * 9.0).min(100.0);
        let h = rng.random_range(16..=24) as f64;
        let x = col as f64 * CELL_W + rng.random_range(0..=20) as f64;
        let y = row as f64 * CELL_H + rng.random_range(0..=12) as f64;
        BBox::new(x, y, w, h)
    };

    let mut regions = Vec::new();
    let mut inline = BTreeMap::new();
    let mut keys = Vec::new();
    let mut values = Vec::new();
    let mut slot = 0;
    for kw in &keywords {
        if slot == n_regions {
            break;
        }
        if rng.random_bool(0.3) {
            let v = value_text(rng);
            let text = format!("{kw}:{v}");
            let b = place(rng, text.chars().count(), slot);
            regions.push(TextRegion::new(b, text, 1.0, RegionKind::FreeText));
            inline.insert(kw.clone(), v);
        } else {
            let b = place(rng, kw.chars().count(), slot);
            regions.push(TextRegion::new(b, kw.clone(), 1.0, RegionKind::FreeText));
            keys.push((kw.clone(), b));
        }
        slot += 1;
    }
    while slot < n_regions {
        let v = value_text(rng);
        let b = place(rng, v.chars().count(), slot);
        regions.push(TextRegion::new(b, v.clone(), 1.0, RegionKind::FreeText));
        values.push((v, b));
        slot += 1;
    }
    regions.shuffle(rng);
    Layout {
        input: StructureInput {
            input_list: regions,
            keyword_list: keywords,
            ticket_type: TicketType::III,
        },
        inline,
        keys,
        values,
    }
}

fn value_text(rng: &mut impl Rng) -> String {
    let len = rng.random_range(3..=8);
    (0..len).map(|_| char::from(b'0' + rng.random_range(0..10u8))).collect()
}

/// The vocabulary words must not fuzzy-match one another, or a generated
/// key line would be read as a different keyword.
pub fn vocabulary_is_separable() -> bool {
    VOCABULARY.iter().all(|a| {
        VOCABULARY
            .iter()
            .all(|b| a == b || fuzzy_match_keyword(a, b).is_none())
    })
}

/// Per-key score of taking `value` for `key`, written out from the matching
/// rule: same row (centres within 0.6 key heights) and to the right ranks by
/// horizontal gap; otherwise strictly below with overlapping x-extent ranks
/// by vertical gap; ties go to the nearer centre, then reading order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score {
    pub tier: u8,
    pub gap: f64,
    pub dist: f64,
    pub y: f64,
    pub x: f64,
}

const UNMATCHED: Score = Score {
    tier: 3,
    gap: 0.0,
    dist: 0.0,
    y: 0.0,
    x: 0.0,
};

pub fn score(key: &BBox, value: &BBox) -> Option<Score> {
    let kcy = key.y + key.h / 2.0;
    let vcy = value.y + value.h / 2.0;
    let dist = ((key.x + key.w / 2.0) - (value.x + value.w / 2.0)).hypot(kcy - vcy);
    let (tier, gap) = if (vcy - kcy).abs() <= 0.6 * key.h && value.x > key.x {
        (1, (value.x - (key.x + key.w)).max(0.0))
    } else {
        let gap = value.y - (key.y + key.h);
        let overlap = (key.x + key.w).min(value.x + value.w) - key.x.max(value.x);
        if gap > 0.0 && overlap > 0.0 {
            (2, gap)
        } else {
            return None;
        }
    };
    Some(Score {
        tier,
        gap,
        dist,
        y: value.y,
        x: value.x,
    })
}

fn cmp_score(a: &Score, b: &Score) -> Ordering {
    a.tier
        .cmp(&b.tier)
        .then(a.gap.total_cmp(&b.gap))
        .then(a.dist.total_cmp(&b.dist))
        .then(a.y.total_cmp(&b.y))
        .then(a.x.total_cmp(&b.x))
}

/// Every injective partial assignment of keys to values, as `choice[k]`.
fn assignments(n_keys: usize, n_values: usize) -> Vec<Vec<Option<usize>>> {
    fn rec(k: usize, n_keys: usize, n_values: usize, used: &mut Vec<bool>, cur: &mut Vec<Option<usize>>, out: &mut Vec<Vec<Option<usize>>>) {
        if k == n_keys {
            out.push(cur.clone());
            return;
        }
        cur.push(None);
        rec(k + 1, n_keys, n_values, used, cur, out);
        cur.pop();
        for v in 0..n_values {
            if !used[v] {
                used[v] = true;
                cur.push(Some(v));
                rec(k + 1, n_keys, n_values, used, cur, out);
                cur.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(0, n_keys, n_values, &mut vec![false; n_values], &mut Vec::new(), &mut out);
    out
}

fn keys_in_reading_order(keys: &[(String, BBox)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| keys[a].1.y.total_cmp(&keys[b].1.y).then(keys[a].1.x.total_cmp(&keys[b].1.x)));
    order
}

fn scored(keys: &[(String, BBox)], values: &[(String, BBox)], choice: &[Option<usize>], order: &[usize]) -> Option<Vec<Score>> {
    order
        .iter()
        .map(|&k| match choice[k] {
            None => Some(UNMATCHED),
            Some(v) => score(&keys[k].1, &values[v].1),
        })
        .collect()
}

pub struct OracleAnswer {
    pub fields: BTreeMap<String, String>,
    pub unresolved: BTreeSet<String>,
}

fn answer(keys: &[(String, BBox)], values: &[(String, BBox)], choice: &[Option<usize>]) -> OracleAnswer {
    let mut fields = BTreeMap::new();
    let mut unresolved = BTreeSet::new();
    for (k, c) in choice.iter().enumerate() {
        match c {
            Some(v) => {
                fields.insert(keys[k].0.clone(), values[*v].0.clone());
            }
            None => {
                unresolved.insert(keys[k].0.clone());
            }
        }
    }
    OracleAnswer { fields, unresolved }
}

/// Minimum score vector, keys compared in reading order. An unmatched key
/// scores worse than any admissible value; a key must not be left unmatched
/// if a feasible value remains, which the ordering already enforces.
pub fn lexicographic_oracle(keys: &[(String, BBox)], values: &[(String, BBox)]) -> OracleAnswer {
    let order = keys_in_reading_order(keys);
    let mut best: Option<(Vec<Score>, Vec<Option<usize>>)> = None;
    for choice in assignments(keys.len(), values.len()) {
        let Some(s) = scored(keys, values, &choice, &order) else {
            continue;
        };
        let better = match &best {
            None => true,
            Some((bs, _)) => s
                .iter()
                .zip(bs)
                .map(|(a, b)| cmp_score(a, b))
                .find(|o| *o != Ordering::Equal)
                == Some(Ordering::Less),
        };
        if better {
            best = Some((s, choice));
        }
    }
    let (_, choice) = best.expect("the empty assignment is always feasible");
    answer(keys, values, &choice)
}

/// Minimum of (unmatched count, summed tier, summed gap) over all
/// assignments. Reported alongside the main oracle for comparison.
pub fn total_score_oracle(keys: &[(String, BBox)], values: &[(String, BBox)]) -> OracleAnswer {
    let order = keys_in_reading_order(keys);
    let mut best: Option<((usize, u32, f64), Vec<Option<usize>>)> = None;
    for choice in assignments(keys.len(), values.len()) {
        let Some(s) = scored(keys, values, &choice, &order) else {
            continue;
        };
        let unmatched = s.iter().filter(|x| x.tier == 3).count();
        let tiers: u32 = s.iter().filter(|x| x.tier < 3).map(|x| x.tier as u32).sum();
        let gaps: f64 = s.iter().map(|x| x.gap).sum();
        let key = (unmatched, tiers, gaps);
        let better = match &best {
            None => true,
            Some((b, _)) => key.0.cmp(&b.0).then(key.1.cmp(&b.1)).then(key.2.total_cmp(&b.2)) == Ordering::Less,
        };
        if better {
            best = Some((key, choice));
        }
    }
    let (_, choice) = best.expect("the empty assignment is always feasible");
    answer(keys, values, &choice)
}

/// Expected structuring output: inline values plus the oracle's pairing.
pub fn expected(layout: &Layout, oracle: fn(&[(String, BBox)], &[(String, BBox)]) -> OracleAnswer) -> OracleAnswer {
    let mut ans = oracle(&layout.keys, &layout.values);
    for (k, v) in &layout.inline {
        ans.fields.insert(k.clone(), v.clone());
    }
    ans
}
