use homog_core::elastic_cell::{
    assemble_cell_system, bulk_density, membrane_cell_density, solve_cell, MembraneMode,
};
use homog_core::energies::elastic_energy;
use homog_core::lattice::{CoefficientField, NeighborSet};
use homog_core::verify::random_planar_field;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

#[test]
fn minimum_never_exceeds_the_affine_competitor() {
    let mut rng = StdRng::seed_from_u64(21);
    for _ in 0..30 {
        let field = random_planar_field(&mut rng);
        let zeta = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        let sys = assemble_cell_system(&field, rng.gen_range(3..9), &zeta).unwrap();
        let res = solve_cell(&sys, 1e-10).unwrap();
        assert!(res.energy <= sys.problem.energy(&sys.affine) + 1e-9);
        assert!(res.diagnostics.residual <= 1e-10);
    }
}

#[test]
fn cell_energy_agrees_with_the_energy_module() {
    let field = CoefficientField::alternating_diagonal(true);
    let sys = assemble_cell_system(&field, 5, &[1.0, -0.5]).unwrap();
    let res = solve_cell(&sys, 1e-12).unwrap();
    let h = elastic_energy(&res.minimizer, &field, &sys.geometry.region).unwrap();
    assert!((h - res.energy).abs() < 1e-9);
}

#[test]
fn densities_are_two_homogeneous() {
    let mut rng = StdRng::seed_from_u64(22);
    for _ in 0..10 {
        let field = random_planar_field(&mut rng);
        let zeta = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let one = bulk_density(&field, &zeta, &[6]).unwrap().estimate;
        let two = bulk_density(&field, &[2.0 * zeta[0], 2.0 * zeta[1]], &[6]).unwrap().estimate;
        assert!((two - 4.0 * one).abs() < 1e-9 * one.max(1.0));
    }
}

#[test]
fn exact_membrane_never_exceeds_elastic() {
    let mut rng = StdRng::seed_from_u64(23);
    for _ in 0..15 {
        let field = random_planar_field(&mut rng);
        let zeta = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
        let t = rng.gen_range(3..=4);
        let Ok(h) = membrane_cell_density(&field, &zeta, t, MembraneMode::Exact) else { continue };
        let f = solve_cell(&assemble_cell_system(&field, t, &zeta).unwrap(), 1e-12).unwrap();
        assert!(h.value <= f.value + 1e-10);
        let g = membrane_cell_density(&field, &zeta, t, MembraneMode::Heuristic).unwrap();
        assert!(g.value >= h.value - 1e-10);
    }
}

#[test]
fn zero_slope_membrane_is_zero() {
    let field = CoefficientField::uniform(NeighborSet::nearest(2), 1.0).unwrap();
    for mode in [MembraneMode::Exact, MembraneMode::Heuristic] {
        assert_eq!(membrane_cell_density(&field, &[0.0, 0.0], 4, mode).unwrap().value, 0.0);
    }
}
