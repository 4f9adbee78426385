use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use morsecount_bench::alternating;
use morsecount_core::{mu_direct, mu_recurrence, solution_bounds};
use std::hint::black_box;

fn counts(c: &mut Criterion) {
    let mut group = c.benchmark_group("mu");
    for m in [4, 8, 12] {
        let cfg = alternating(m, 12);
        group.bench_with_input(BenchmarkId::new("recurrence", m), &cfg, |b, cfg| b.iter(|| mu_recurrence(black_box(cfg))));
        group.bench_with_input(BenchmarkId::new("direct", m), &cfg, |b, cfg| b.iter(|| mu_direct(black_box(cfg))));
    }
    group.finish();
    let cfg = alternating(9, 12);
    c.bench_function("solution_bounds/m9", |b| b.iter(|| solution_bounds(black_box(&cfg))));
}

criterion_group!(benches, counts);
criterion_main!(benches);
