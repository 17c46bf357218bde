use criterion::{criterion_group, criterion_main, Criterion};
use thermoforge::{simulate_gm, SimConfig};
use thermoforge_bench::full_shift;

fn simulate(c: &mut Criterion) {
    let config = SimConfig {
        potential: full_shift(3),
        t_star: 1.0,
        orbit_lengths: vec![100, 1000],
        samples_per_m: 20_000,
        seed: 42,
    };
    let mut group = c.benchmark_group("cltsim");
    group.sample_size(10);
    group.bench_function("n=3/m=100,1000/20k", |b| b.iter(|| simulate_gm(&config)));
    group.finish();
}

criterion_group!(benches, simulate);
criterion_main!(benches);
