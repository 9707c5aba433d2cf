//! Parallel vs. single-worker timings for the data-parallel kernels.
//!
//! With the default `parallel` feature each kernel runs once inside a
//! one-thread pool and once on the global pool. Built with
//! `--no-default-features` only the sequential path exists and a single
//! series is reported.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use homog_core::energies::weak_membrane_energy;
use homog_core::lattice::{CoefficientField, LatticeFunction, LatticeRegion, NeighborSet};
use homog_core::membrane::maximal_function;
use homog_core::spin_cell::{surface_density, sweep_directions};

type Job<'a> = &'a mut (dyn FnMut() + Send);
type Runner = Box<dyn Fn(Job<'_>)>;

fn modes() -> Vec<(&'static str, Runner)> {
    #[cfg(feature = "parallel")]
    {
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        vec![
            ("sequential", Box::new(move |f: Job<'_>| single.install(|| f()))),
            ("parallel", Box::new(|f: Job<'_>| f())),
        ]
    }
    #[cfg(not(feature = "parallel"))]
    {
        vec![("sequential", Box::new(|f: Job<'_>| f()))]
    }
}

fn surface_sweep(c: &mut Criterion) {
    let field = CoefficientField::alternating_diagonal(true);
    let dirs = sweep_directions(2, 8).unwrap();
    let mut group = c.benchmark_group("surface_sweep");
    group.sample_size(10);
    for (name, run) in modes() {
        group.bench_function(BenchmarkId::new(name, "8 dirs x T in {8,16,24}"), |b| {
            b.iter(|| {
                run(&mut || {
                    for nu in &dirs {
                        black_box(surface_density(&field, nu, &[8, 16, 24]).unwrap());
                    }
                })
            })
        });
    }
    group.finish();
}

fn square_function(n: usize) -> (LatticeFunction, LatticeRegion) {
    let eps = 1.0 / n as f64;
    let region = LatticeRegion::axis_cube(vec![0.5 - eps / 2.0; 2], 1.0).unwrap();
    let u = LatticeFunction::from_fn(region.clone(), eps, |x| (7.0 * x[0]).sin() * (3.0 * x[1]).cos()).unwrap();
    (u, region)
}

fn maximal(c: &mut Criterion) {
    let (u, region) = square_function(40);
    let mut group = c.benchmark_group("maximal_function");
    group.sample_size(10);
    for (name, run) in modes() {
        group.bench_function(BenchmarkId::new(name, "40x40"), |b| {
            b.iter(|| run(&mut || { black_box(maximal_function(&u, &region).unwrap()); }))
        });
    }
    group.finish();
}

fn energy(c: &mut Criterion) {
    let (u, region) = square_function(200);
    let field = CoefficientField::uniform(NeighborSet::planar_with_diagonals(), 1.0).unwrap();
    let mut group = c.benchmark_group("weak_membrane_energy");
    for (name, run) in modes() {
        group.bench_function(BenchmarkId::new(name, "200x200"), |b| {
            b.iter(|| run(&mut || { black_box(weak_membrane_energy(&u, &field, &region).unwrap()); }))
        });
    }
    group.finish();
}

criterion_group!(benches, surface_sweep, maximal, energy);
criterion_main!(benches);
