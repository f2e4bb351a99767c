use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use dles_core::fluxes::{burgers_rhs, ns_rhs, BurgersParams, NSParams};
use dles_core::ops3d::{diff_3d, filter_scalar};
use dles_core::projection::{divergence, poisson_solve, PoissonSolver};
use dles_core::simulate::RngStream;
use dles_core::{
    make_grid_pair_3d, Field1, Field3, FilterKind, Grid1D, Grid3D, StaggerLocation, VectorField,
};

fn random_scalar(grid: Grid3D, location: StaggerLocation, seed: u64) -> Field3 {
    let mut rng = RngStream::new(seed);
    let values = (0..grid.points()).map(|_| rng.uniform() - 0.5).collect();
    Field3::new(grid, location, values).unwrap()
}

fn random_vector(grid: Grid3D, seed: u64) -> VectorField {
    let mut v = VectorField::zeros(grid);
    let mut rng = RngStream::new(seed);
    for c in &mut v.components {
        for x in &mut c.values {
            *x = rng.uniform() - 0.5;
        }
    }
    v
}

fn bench_diff_3d(c: &mut Criterion) {
    let grid = Grid3D::new(64, 1.0).unwrap();
    let u = random_scalar(grid, StaggerLocation::Center, 1);
    c.bench_function("diff_3d 64^3", |b| {
        b.iter(|| diff_3d(black_box(&u), 1).unwrap())
    });
}

fn bench_filter_scalar(c: &mut Criterion) {
    let fine = Grid3D::new(81, 1.0).unwrap();
    let coarse = Grid3D::new(27, 1.0).unwrap();
    let pair = make_grid_pair_3d(fine, coarse).unwrap();
    let u = random_scalar(fine, StaggerLocation::Center, 2);
    c.bench_function("filter_scalar volume 81^3 -> 27^3", |b| {
        b.iter(|| filter_scalar(black_box(&pair), black_box(&u), FilterKind::Volume).unwrap())
    });
}

fn bench_poisson_solve(c: &mut Criterion) {
    let grid = Grid3D::new(64, 1.0).unwrap();
    let solver = PoissonSolver::new(grid);
    let rhs = divergence(&random_vector(grid, 3)).unwrap();
    c.bench_function("poisson_solve 64^3", |b| {
        b.iter(|| poisson_solve(black_box(&solver), black_box(&rhs)).unwrap())
    });
}

fn bench_ns_rhs(c: &mut Criterion) {
    let grid = Grid3D::new(48, 1.0).unwrap();
    let solver = PoissonSolver::new(grid);
    let v = random_vector(grid, 4);
    let p = NSParams::new(2.5e-5).unwrap();
    c.bench_function("ns_rhs 48^3", |b| {
        b.iter(|| ns_rhs(black_box(&solver), black_box(&v), p).unwrap())
    });
}

fn bench_burgers_rhs(c: &mut Criterion) {
    let grid = Grid1D::new(6561, 2.0 * std::f64::consts::PI).unwrap();
    let mut rng = RngStream::new(5);
    let values = (0..grid.n).map(|_| rng.uniform() - 0.5).collect();
    let u = Field1::new(grid, StaggerLocation::Center, values).unwrap();
    let p = BurgersParams::new(5e-4).unwrap();
    c.bench_function("burgers_rhs 6561", |b| {
        b.iter(|| burgers_rhs(black_box(&u), p).unwrap())
    });
}

criterion_group!(
    kernels,
    bench_diff_3d,
    bench_filter_scalar,
    bench_poisson_solve,
    bench_ns_rhs,
    bench_burgers_rhs
);
criterion_main!(kernels);
