use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use trimlump::assembly::{assemble, LumpingScheme};
use trimlump::dynamics::{central_difference, critical_timestep, IntegratorConfig, Scheme};
use trimlump::eigen::max_eigenvalue;
use trimlump::experiment::{Discretization, MassTreatment, Model};
use trimlump::problems::Example;

fn model(example: Example, n: usize) -> Model {
    Model::build(Discretization::reference(example).with_elements(n)).expect("model builds")
}

fn assembly(c: &mut Criterion) {
    let mut g = c.benchmark_group("assembly");
    g.sample_size(10);
    for n in [16, 32] {
        let m = model(Example::Perforated, n);
        g.bench_with_input(BenchmarkId::new("perforated", n), &m, |b, m| {
            b.iter(|| assemble(black_box(&m.space), false))
        });
    }
    g.finish();
}

fn lumping(c: &mut Criterion) {
    let m = model(Example::Perforated, 32);
    let mut g = c.benchmark_group("lumping");
    for (name, scheme) in [
        ("rowsum", LumpingScheme::RowSum),
        ("block4", LumpingScheme::BlockDiagonal(4)),
    ] {
        g.bench_function(name, |b| {
            b.iter(|| m.mass(black_box(MassTreatment::Lumped(scheme))).unwrap())
        });
    }
    g.finish();
}

fn largest_eigenvalue(c: &mut Criterion) {
    let mut g = c.benchmark_group("max_eigenvalue");
    g.sample_size(10);
    for (name, example, n) in [
        ("ex1d", Example::Ex1D, 256),
        ("rotsquare", Example::RotSquare, 32),
    ] {
        let m = model(example, n);
        let lumped = m
            .mass(MassTreatment::Lumped(LumpingScheme::RowSum))
            .unwrap();
        g.bench_function(name, |b| {
            b.iter(|| max_eigenvalue(&m.ops.k, black_box(&lumped), 0).unwrap())
        });
    }
    g.finish();
}

fn explicit_steps(c: &mut Criterion) {
    let m = model(Example::RotSquare, 32);
    let mass = m
        .mass(MassTreatment::Lumped(LumpingScheme::RowSum))
        .unwrap();
    let dt = 0.85 * critical_timestep(max_eigenvalue(&m.ops.k, &mass, 0).unwrap()).unwrap();
    let u0 = vec![0.0; m.ops.len()];
    let v0 = m.initial_velocity().unwrap();
    let cfg = IntegratorConfig::new(Scheme::CentralDifference, dt, 100.0 * dt).with_stride(1000);
    c.bench_function("central_difference_100_steps", |b| {
        b.iter(|| {
            central_difference(
                &m.ops.k,
                &mass,
                |_| vec![0.0; u0.len()],
                &u0,
                black_box(&v0),
                &cfg,
            )
            .unwrap()
        })
    });
}

criterion_group!(
    benches,
    assembly,
    lumping,
    largest_eigenvalue,
    explicit_steps
);
criterion_main!(benches);
