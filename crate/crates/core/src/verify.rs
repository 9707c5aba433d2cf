//! Seeded cross-checks between independent solvers.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::cell::{default_center, CellGeometry};
use crate::elastic_cell::{assemble_cell_system, closed_form_density, solve_cell};
use crate::energies::{elastic_energy, weak_membrane_energy};
use crate::error::Result;
use crate::lattice::{CoefficientField, LatticeFunction, LatticeRegion, NeighborSet};
use crate::membrane::{alternating_minimize, exact_minimize_1d, GncSchedule};
use crate::spin_cell::{brute_force_ground_state, build_cut_network, min_cut_ground_state};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyCheck {
    pub name: String,
    pub cases: usize,
    pub failures: usize,
    pub worst: f64,
}

impl PropertyCheck {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Random periodic planar field: nearest neighbours in `[0.5, 2]`, diagonals
/// (when present) in `{0} ∪ [0.5, 2]`.
pub fn random_planar_field(rng: &mut StdRng) -> CoefficientField {
    let diagonals = rng.gen_bool(0.5);
    let neighbors = if diagonals { NeighborSet::planar_with_diagonals() } else { NeighborSet::nearest(2) };
    let period = rng.gen_range(1..=3);
    let count = period * period;
    let values = (0..count)
        .map(|_| {
            (0..neighbors.len())
                .map(|k| if k >= 2 && rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.5..2.0) })
                .collect()
        })
        .collect();
    CoefficientField::new(neighbors, period, values, None, None, false).expect("valid random field")
}

/// Random fully positive planar field.
pub fn random_positive_field(rng: &mut StdRng) -> CoefficientField {
    let neighbors = if rng.gen_bool(0.5) { NeighborSet::planar_with_diagonals() } else { NeighborSet::nearest(2) };
    let period = rng.gen_range(1..=3);
    let values = (0..period * period)
        .map(|_| (0..neighbors.len()).map(|_| rng.gen_range(0.5..2.0)).collect())
        .collect();
    CoefficientField::new(neighbors, period, values, None, None, false).expect("valid random field")
}

pub fn random_direction(rng: &mut StdRng) -> Vec<f64> {
    let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    vec![a.cos(), a.sin()]
}

/// A random spin-cell instance with between 1 and `max_free` free sites.
pub fn random_spin_instance(rng: &mut StdRng, max_free: usize) -> (CoefficientField, Vec<f64>, usize) {
    loop {
        let field = random_planar_field(rng);
        let nu = random_direction(rng);
        let size = rng.gen_range(3..=6);
        let geom = CellGeometry::new(&field, size, Some(&nu), &default_center(2)).expect("valid cell");
        let free = geom.free_count();
        if (1..=max_free).contains(&free) {
            return (field, nu, size);
        }
    }
}

fn record(name: &str, samples: impl IntoIterator<Item = (bool, f64)>) -> PropertyCheck {
    let mut check = PropertyCheck { name: name.into(), cases: 0, failures: 0, worst: 0.0 };
    for (ok, gap) in samples {
        check.cases += 1;
        check.failures += usize::from(!ok);
        check.worst = check.worst.max(gap);
    }
    check
}

pub fn mincut_vs_brute_force(seed: u64, cases: usize) -> Result<PropertyCheck> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(cases);
    for _ in 0..cases {
        let (field, nu, size) = random_spin_instance(&mut rng, 12);
        let net = build_cut_network(&field, size, &nu, &default_center(2))?;
        let cut = min_cut_ground_state(&net)?.energy;
        let (brute, _) = brute_force_ground_state(&field, size, &nu)?;
        let gap = (cut - brute).abs();
        out.push((gap <= 1e-9, gap));
    }
    Ok(record("min-cut equals exhaustive ground state", out))
}

pub fn cut_certificates(seed: u64, cases: usize) -> Result<PropertyCheck> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(cases);
    for _ in 0..cases {
        let field = random_planar_field(&mut rng);
        let nu = random_direction(&mut rng);
        let size = rng.gen_range(4..=16);
        let ground = min_cut_ground_state(&build_cut_network(&field, size, &nu, &default_center(2))?)?;
        let gap = (ground.energy - ground.resummed).abs();
        out.push((gap <= 1e-9, gap));
    }
    Ok(record("max-flow value equals re-summed cut", out))
}

pub fn closed_form_vs_cg(seed: u64, cases: usize) -> Result<PropertyCheck> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(cases);
    for _ in 0..cases {
        let field = random_positive_field(&mut rng);
        let zeta = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
        let size = rng.gen_range(4..=10);
        let value = solve_cell(&assemble_cell_system(&field, size, &zeta)?, 1e-10)?.value;
        let expected = closed_form_density(field.neighbors(), &zeta)?;
        let gap = (value - expected).abs();
        out.push((gap <= 1e-8 * expected.max(1.0), gap));
    }
    Ok(record("elastic cell equals closed form", out))
}

/// Noisy step on a path of `n` sites with spacing `1/n`.
pub fn noisy_step(rng: &mut StdRng, n: usize, height: f64, noise: f64) -> LatticeFunction {
    let eps = 1.0 / n as f64;
    let jump = rng.gen_range(n / 4..3 * n / 4);
    let region = LatticeRegion::explicit(1, (0..n).map(|i| vec![i as f64 * eps]).collect()).expect("path");
    let values = (0..n)
        .map(|i| if i < jump { 0.0 } else { height } + noise * (rng.gen::<f64>() * 2.0 - 1.0))
        .collect();
    LatticeFunction::from_values(region, eps, values).expect("path values")
}

pub fn dp_vs_alternating(seed: u64, cases: usize) -> Result<PropertyCheck> {
    let mut rng = StdRng::seed_from_u64(seed);
    let field = CoefficientField::uniform(NeighborSet::nearest(1), 1.0)?;
    let mut out = Vec::with_capacity(cases);
    for _ in 0..cases {
        let n = rng.gen_range(20..=80);
        let height = rng.gen_range(0.5..3.0);
        let g = noisy_step(&mut rng, n, height, 0.1);
        let weight = rng.gen_range(5.0..50.0);
        let exact = exact_minimize_1d(&g, &field, weight)?;
        let run = alternating_minimize(&g, &field, weight, &GncSchedule::default(), 200)?;
        let monotone = trace_is_monotone(&run.trace, 1e-12);
        let gap = exact.energy - run.energy;
        out.push((gap <= 1e-9 && monotone, gap.max(0.0)));
    }
    Ok(record("path optimum bounds alternating minimization", out))
}

pub fn truncation_ordering(seed: u64, cases: usize) -> Result<PropertyCheck> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(cases);
    for _ in 0..cases {
        let field = random_planar_field(&mut rng);
        let eps = [1.0, 0.5, 0.25][rng.gen_range(0..3)];
        let region = LatticeRegion::axis_cube(vec![0.1, -0.2], 2.0)?;
        let scale = rng.gen_range(0.1..3.0);
        let u = LatticeFunction::from_fn(region.clone(), eps, |_| 0.0)?;
        let u = u.with_values(u.values().iter().map(|_| rng.gen_range(-scale..scale)).collect())?;
        let f = weak_membrane_energy(&u, &field, &region)?;
        let h = elastic_energy(&u, &field, &region)?;
        let ok = f.total <= h + 1e-12 && (f.broken_bond_count() == 0 || f.total < h);
        out.push((ok, (f.total - h).max(0.0)));
    }
    Ok(record("weak membrane below elastic energy", out))
}

/// The full suite used by `homog-lab verify`.
pub fn run_suite(seed: u64) -> Result<Vec<PropertyCheck>> {
    Ok(vec![
        mincut_vs_brute_force(seed, 100)?,
        cut_certificates(seed.wrapping_add(1), 30)?,
        closed_form_vs_cg(seed.wrapping_add(2), 30)?,
        dp_vs_alternating(seed.wrapping_add(3), 20)?,
        truncation_ordering(seed.wrapping_add(4), 100)?,
    ])
}

/// Whether the stage-local energy trace never rises.
pub fn trace_is_monotone(trace: &[crate::membrane::TraceEntry], tol: f64) -> bool {
    trace.windows(2).all(|w| w[0].stage != w[1].stage || w[1].energy <= w[0].energy + tol)
}
