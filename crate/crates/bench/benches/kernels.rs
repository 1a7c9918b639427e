use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use groundstate_bench::{smooth_pair, unit_grid};
use groundstate_core::operators::full_eigenbasis;
use groundstate_core::{energy, laplacian_apply, residual, solve_scalar, Boundary, SolveOptions, SystemParams};

fn laplacian(c: &mut Criterion) {
    let mut group = c.benchmark_group("laplacian");
    for (dim, n) in [(1, 4097), (2, 257), (3, 49), (4, 17)] {
        let grid = unit_grid(dim, n, Boundary::Neumann);
        let pair = smooth_pair(&grid);
        group.bench_with_input(BenchmarkId::from_parameter(format!("{dim}d")), &pair.u, |b, f| {
            b.iter(|| laplacian_apply(black_box(f)))
        });
    }
    group.finish();
}

fn preconditioner(c: &mut Criterion) {
    let mut group = c.benchmark_group("precondition");
    for (dim, n) in [(1, 1025), (2, 257), (3, 49)] {
        let grid = unit_grid(dim, n, Boundary::Neumann);
        let pair = smooth_pair(&grid);
        let basis = full_eigenbasis(&grid);
        group.bench_with_input(BenchmarkId::from_parameter(format!("{dim}d")), &pair.u, |b, f| {
            b.iter(|| basis.precondition(black_box(f), 5.0).unwrap())
        });
    }
    group.finish();
}

fn energy_and_residual(c: &mut Criterion) {
    let params = SystemParams::new(5.0, 5.0, -2.0).unwrap();
    let grid = unit_grid(2, 257, Boundary::Neumann);
    let pair = smooth_pair(&grid);
    c.bench_function("energy/2d", |b| b.iter(|| energy(black_box(&pair), &params)));
    c.bench_function("residual/2d", |b| b.iter(|| residual(black_box(&pair), &params)));
}

fn scalar_solve(c: &mut Criterion) {
    let grid = unit_grid(1, 257, Boundary::Neumann);
    let opts = SolveOptions::default();
    let mut group = c.benchmark_group("solve_scalar");
    group.sample_size(10);
    group.bench_function("1d_lambda25", |b| b.iter(|| solve_scalar(black_box(25.0), &grid, &opts).unwrap()));
    group.finish();
}

criterion_group!(benches, laplacian, preconditioner, energy_and_residual, scalar_solve);
criterion_main!(benches);
