//! Evaluation samples reproducing reference per-category accuracy figures,
//! and reference per-category timing pairs.

#![allow(dead_code)]

use ticketflow_core::metrics::{CategoryTiming, SampleEval};

pub const TICKETS_PER_CATEGORY: u64 = 200;

/// (category, strings correct, strings total, fully correct tickets,
/// reference string accuracy %, reference whole-ticket accuracy %).
pub const ACCURACY_ROWS: [(&str, u64, u64, u64, f64, f64); 5] = [
    ("VAT ticket", 2403, 2500, 174, 96.12, 87.0),
    ("quota ticket", 398, 400, 199, 99.5, 99.5),
    ("taxi ticket", 792, 800, 195, 99.0, 97.5),
    ("train ticket", 1152, 1200, 174, 96.0, 87.0),
    ("bank receipt", 758, 800, 174, 94.75, 87.0),
];

pub const REFERENCE_MEAN_STRING_ACCURACY: f64 = 0.9707;
pub const REFERENCE_MEAN_TICKET_ACCURACY: f64 = 0.916;

/// `tickets` samples whose counts sum to (`correct`, `total`), with exactly
/// `fully_correct` tickets free of errors. Strings are spread evenly and the
/// errors round-robin over the failing tickets.
pub fn samples(correct: u64, total: u64, fully_correct: u64, tickets: u64) -> Vec<SampleEval> {
    let errors = total - correct;
    let failing = tickets - fully_correct;
    assert!(errors >= failing && (failing > 0 || errors == 0));
    let n: Vec<u64> = (0..tickets).map(|i| total / tickets + u64::from(i < total % tickets)).collect();
    let mut wrong = vec![0u64; tickets as usize];
    for e in 0..errors {
        wrong[(e % failing) as usize] += 1;
    }
    // a failing ticket needs room for its errors
    assert!(wrong.iter().zip(&n).all(|(w, n)| w <= n));
    (0..tickets as usize)
        .map(|i| SampleEval::new(n[i] - wrong[i], n[i], wrong[i] == 0))
        .collect()
}

/// (category, routed ms, full-surface ms, reference ratio).
pub const TIMING_ROWS: [(&str, f64, f64, f64); 4] = [
    ("VAT ticket", 88.67, 844.33, 9.52),
    ("quota ticket", 55.0, 153.67, 2.79),
    ("train ticket", 85.33, 334.33, 3.92),
    ("taxi ticket", 72.67, 380.67, 5.24),
];

pub fn timing_rows(weights: [f64; 4]) -> Vec<CategoryTiming> {
    TIMING_ROWS
        .iter()
        .zip(weights)
        .map(|(&(category, fast, general, _), weight)| CategoryTiming {
            category: category.to_string(),
            fast_ms: fast,
            general_ms: general,
            weight,
        })
        .collect()
}
