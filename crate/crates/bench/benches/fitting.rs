use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use thermoforge::{feasible_a2_range, fit_level1, fit_level2, table3_solve, Germ};

fn table3(c: &mut Criterion) {
    c.bench_function("table3_solve/1e1..1e40", |b| {
        b.iter(|| (1..=40).map(|k| table3_solve(black_box(10f64.powi(k)))).collect::<Vec<_>>())
    });
}

fn level1(c: &mut Criterion) {
    let germ = Germ::level1(1.0, 2.0, 1.0).unwrap();
    c.bench_function("fit_level1/n=50", |b| b.iter(|| fit_level1(black_box(&germ), 50)));
}

fn level2(c: &mut Criterion) {
    let g = Germ::level1(1.0, 2.0, 1.0).unwrap();
    let (lo, hi) = feasible_a2_range(&g, 50).unwrap();
    let germ = Germ::level2(1.0, 2.0, 1.0, 0.5 * (lo + hi)).unwrap();
    let mut group = c.benchmark_group("fit_level2");
    group.sample_size(20);
    group.bench_function("feasible_a2_range/n=50", |b| b.iter(|| feasible_a2_range(black_box(&g), 50)));
    group.bench_function("fit/n=50", |b| b.iter(|| fit_level2(black_box(&germ), 50)));
    group.finish();
}

criterion_group!(benches, table3, level1, level2);
criterion_main!(benches);
