use criterion::{criterion_group, criterion_main, Criterion};
use magflow::scattering::{scattering_table, ScatterGrid, ScatterSettings};
use magflow_bench::{disk, flat, gaussian_field};

fn table_bench(c: &mut Criterion) {
    let s = ScatterSettings::default();
    let grid = ScatterGrid::new(16, 16).unwrap();
    let dom = disk(0.9);
    let mut g = c.benchmark_group("scattering_table");
    g.sample_size(10);
    g.bench_function("flat_16x16", |b| b.iter(|| scattering_table(&flat(1.0), &dom, grid, &s).unwrap()));
    let sys = gaussian_field();
    g.bench_function("gaussian_16x16", |b| b.iter(|| scattering_table(&sys, &dom, grid, &s).unwrap()));
    g.finish();
}

criterion_group!(benches, table_bench);
criterion_main!(benches);
