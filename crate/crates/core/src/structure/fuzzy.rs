//! Approximate keyword spotting inside a recognised line.

use serde::{Deserialize, Serialize};

/// A keyword occurrence, as character offsets into the original line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordMatch {
    pub start: usize,
    pub end: usize,
    pub edit_distance: usize,
}

fn is_separator(c: char) -> bool {
    c == ':' || c == '：'
}

/// The line with separators and the whitespace around them removed, plus
/// the original character index of every kept character.
pub fn normalize_with_offsets(line: &str) -> (Vec<char>, Vec<usize>) {
    let chars: Vec<char> = line.chars().collect();
    let mut drop = vec![false; chars.len()];
    for (i, &c) in chars.iter().enumerate() {
        if !is_separator(c) {
            continue;
        }
        drop[i] = true;
        let mut j = i;
        while j > 0 && chars[j - 1].is_whitespace() {
            j -= 1;
            drop[j] = true;
        }
        let mut j = i + 1;
        while j < chars.len() && chars[j].is_whitespace() {
            drop[j] = true;
            j += 1;
        }
    }
    let mut out = Vec::with_capacity(chars.len());
    let mut map = Vec::with_capacity(chars.len());
    for (i, &c) in chars.iter().enumerate() {
        if !drop[i] {
            out.push(c);
            map.push(i);
        }
    }
    (out, map)
}

pub fn normalize_separators(line: &str) -> String {
    normalize_with_offsets(line).0.into_iter().collect()
}

/// Levenshtein distance over characters.
pub fn edit_distance(a: &[char], b: &[char]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Errors tolerated for a keyword: one per four characters.
pub fn match_threshold(keyword_len: usize) -> usize {
    keyword_len / 4
}

/// Best window of length `|keyword| - 1 ..= |keyword| + 1` over the
/// separator-normalised line, if its distance is within the threshold.
/// Ties go to the leftmost, then the shortest, window.
pub fn fuzzy_match_keyword(line: &str, keyword: &str) -> Option<KeywordMatch> {
    let kw: Vec<char> = keyword.chars().collect();
    if kw.is_empty() {
        return None;
    }
    let (norm, map) = normalize_with_offsets(line);
    let threshold = match_threshold(kw.len());
    let mut best: Option<(usize, usize, usize)> = None; // (distance, start, len)
    let lens = [kw.len().saturating_sub(1), kw.len(), kw.len() + 1];
    for start in 0..norm.len() {
        for &len in &lens {
            if len == 0 || start + len > norm.len() {
                continue;
            }
            let d = edit_distance(&norm[start..start + len], &kw);
            if d > threshold {
                continue;
            }
            let better = match best {
                None => true,
                Some((bd, bs, bl)) => (d, start, len) < (bd, bs, bl),
            };
            if better {
                best = Some((d, start, len));
            }
        }
    }
    best.map(|(d, s, len)| KeywordMatch {
        start: map[s],
        end: map[s + len - 1] + 1,
        edit_distance: d,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_keyword_at_line_start() {
        let m = fuzzy_match_keyword("Amount:100.00", "Amount").unwrap();
        assert_eq!((m.start, m.end, m.edit_distance), (0, 6, 0));
    }

    #[test]
    fn one_substitution_tolerated() {
        let m = fuzzy_match_keyword("Amaunt:100.00", "Amount").unwrap();
        assert_eq!(m.edit_distance, 1);
        assert_eq!((m.start, m.end), (0, 6));
    }

    #[test]
    fn distant_word_rejected() {
        assert_eq!(fuzzy_match_keyword("Balance", "Date"), None);
    }

    #[test]
    fn offsets_refer_to_original_line() {
        // "Fee" sits after a separator with padding that normalisation removes
        let m = fuzzy_match_keyword("Toll : Fee", "Fee").unwrap();
        assert_eq!((m.start, m.end), (7, 10));
    }

    #[test]
    fn normalisation_is_idempotent_on_sample() {
        let once = normalize_separators("Payer : ACME  Co：Zenith");
        assert_eq!(once, "PayerACME  CoZenith");
        assert_eq!(normalize_separators(&once), once);
    }

    #[test]
    fn distance_basics() {
        let c = |s: &str| s.chars().collect::<Vec<_>>();
        assert_eq!(edit_distance(&c("kitten"), &c("sitting")), 3);
        assert_eq!(edit_distance(&c(""), &c("abc")), 3);
        assert_eq!(edit_distance(&c("王五"), &c("玉五")), 1);
    }
}
