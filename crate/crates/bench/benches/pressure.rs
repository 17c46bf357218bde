use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use thermoforge::{pressure, pressure_jet, q_values};
use thermoforge_bench::{full_shift, golden_mean, values};

fn closed_form(c: &mut Criterion) {
    let mut group = c.benchmark_group("pressure");
    for n in [2, 64, 4096] {
        let pot = full_shift(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &pot, |b, pot| b.iter(|| pressure(pot, black_box(1.3))));
    }
    group.finish();
}

fn jet(c: &mut Criterion) {
    let pot = full_shift(256);
    let mut group = c.benchmark_group("pressure_jet");
    for order in [2, 4, 8, 12] {
        group.bench_with_input(BenchmarkId::from_parameter(order), &order, |b, &order| {
            b.iter(|| pressure_jet(&pot, black_box(0.7), order))
        });
    }
    group.finish();
}

fn spectral(c: &mut Criterion) {
    let mut group = c.benchmark_group("pressure_spectral");
    for window in [2, 6, 10] {
        let pot = golden_mean(window);
        group.bench_with_input(BenchmarkId::from_parameter(window), &pot, |b, pot| {
            b.iter(|| pressure(pot, black_box(0.9)))
        });
    }
    group.finish();
}

fn q_sums(c: &mut Criterion) {
    let mut group = c.benchmark_group("q_values");
    for n in [512, 2048, 100_000] {
        let z = values(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &z, |b, z| b.iter(|| q_values(z, black_box(1.1))));
    }
    group.finish();
}

criterion_group!(benches, closed_form, jet, spectral, q_sums);
criterion_main!(benches);
