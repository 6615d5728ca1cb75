use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use ticketflow_bench::{bank_receipt_input, rotated, ticket, ROTATION_TITLE};
use ticketflow_core::preprocess::{HoughOrientationClassifier, RotationClassifier};
use ticketflow_core::structure::structure_fields;
use ticketflow_core::{process_ticket_with, BackendSet, PipelineConfig, ProcessOptions};

fn hough(c: &mut Criterion) {
    let mut g = c.benchmark_group("hough_orientation");
    for n_class in [4u32, 8, 16] {
        let clf = HoughOrientationClassifier::new(n_class, vec![ROTATION_TITLE.to_string()]);
        let img = rotated(360.0 / n_class as f64, 1);
        g.bench_with_input(BenchmarkId::from_parameter(n_class), &img, |b, img| {
            b.iter(|| clf.predict(black_box(img)))
        });
    }
    g.finish();
}

fn structure(c: &mut Criterion) {
    let input = bank_receipt_input(3);
    c.bench_function("structure_bank_receipt", |b| b.iter(|| structure_fields(black_box(&input))));
}

fn routing(c: &mut Criterion) {
    let cfg = PipelineConfig::default();
    let backends = BackendSet::from_config(&cfg.backends, &cfg);
    let mut g = c.benchmark_group("process_ticket");
    for category in ["VAT ticket", "quota ticket", "train ticket", "taxi ticket", "bank receipt"] {
        let img = ticket(category, 7);
        for (arm, full) in [("routed", false), ("full-surface", true)] {
            let opts = ProcessOptions { force_full_surface: full };
            g.bench_with_input(BenchmarkId::new(arm, category), &img, |b, img| {
                b.iter(|| process_ticket_with(black_box(img), &cfg, &backends, opts))
            });
        }
    }
    g.finish();
}

criterion_group!(benches, hough, structure, routing);
criterion_main!(benches);
