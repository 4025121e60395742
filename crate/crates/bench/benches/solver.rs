use criterion::{criterion_group, criterion_main, Criterion};
use radialis_core::{
    numerov_propagate, spectrum, BoundaryPolicy, Direction, GridSpec, Potential, RadialGrid,
    SolveRequest,
};
use std::hint::black_box;

fn hydrogen_spectrum(c: &mut Criterion) {
    let p = Potential::coulomb(1.0).unwrap();
    let grid = GridSpec::default()
        .build(&p, &BoundaryPolicy::Dirichlet, None)
        .unwrap();
    let req = SolveRequest::new(p, 0, BoundaryPolicy::Dirichlet, grid, (-1.0, -1e-4));
    c.bench_function("hydrogen l=0, 4 states, 40000 points", |b| {
        b.iter(|| spectrum(black_box(&req), 4).unwrap())
    });
}

fn sae_state(c: &mut Criterion) {
    let p = Potential::inverse_square(0.5 * (0.25 - 0.75 * 0.75)).unwrap();
    let policy = BoundaryPolicy::sae(2.0 * std::f64::consts::PI / 3.0, 1.0);
    let grid = GridSpec::default().build(&p, &policy, None).unwrap();
    let req = SolveRequest::new(p, 0, policy, grid, (-1e3, -1e-6));
    c.bench_function("inverse square P=0.75, SAE ground state", |b| {
        b.iter(|| spectrum(black_box(&req), 1).unwrap())
    });
}

fn numerov(c: &mut Criterion) {
    let grid = RadialGrid::linear(1.0, 11.0, 40001).unwrap();
    let (u0, u1) = (grid.nodes()[0].sin(), grid.nodes()[1].sin());
    c.bench_function("numerov 40001 nodes", |b| {
        b.iter(|| {
            numerov_propagate(|_| -1.0, black_box(&grid), u0, u1, Direction::Outward).unwrap()
        })
    });
}

criterion_group!(benches, hydrogen_spectrum, sae_state, numerov);
criterion_main!(benches);
