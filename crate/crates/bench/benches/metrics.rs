use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use disclose_bench::{candidates, span_corpus};
use disclose_core::detect::{Detector, PluginRegistry};
use disclose_core::eval::{evaluate, matching_score, span_prf, GenMetric, SpanMatchMode};

fn span_metrics(c: &mut Criterion) {
    let mut group = c.benchmark_group("span_prf");
    for n in [100, 1000] {
        let (_, gold, pred) = span_corpus(n, 60, 1);
        for mode in [SpanMatchMode::Exact, SpanMatchMode::Partial] {
            group.bench_with_input(BenchmarkId::new(format!("{mode:?}"), n), &n, |b, _| {
                b.iter(|| span_prf(black_box(&pred), black_box(&gold), mode))
            });
        }
    }
    group.finish();

    let (docs, gold, pred) = span_corpus(500, 60, 2);
    c.bench_function("evaluate_with_tokens/500", |b| {
        b.iter(|| evaluate(black_box(&pred), black_box(&gold), Some(&docs)).unwrap())
    });
}

fn generation_metrics(c: &mut Criterion) {
    let g = candidates(3, 3);
    let r = candidates(3, 4);
    for metric in GenMetric::ALL {
        c.bench_function(&format!("matching_score/{metric:?}"), |b| {
            b.iter(|| matching_score(black_box(&g), black_box(&r), metric).unwrap())
        });
    }
}

fn detection(c: &mut Criterion) {
    let detector = Detector::from_config(&Default::default(), &PluginRegistry::with_defaults()).unwrap();
    let (docs, _, _) = span_corpus(50, 120, 5);
    c.bench_function("detect_pattern/50x120", |b| {
        b.iter(|| {
            for d in &docs {
                black_box(detector.detect(d).unwrap());
            }
        })
    });
}

criterion_group!(benches, span_metrics, generation_metrics, detection);
criterion_main!(benches);
