//! Bulk density `f(zeta)` from the quadratic cell problem
//!
//! `f_T(zeta) = T^{-d} min { H_1(v, Q_T) : v_i = zeta . i on the frozen sites }`,
//!
//! plus the weak-membrane counterpart `h_T` with the same boundary data.

use std::time::Instant;

use crate::cell::{default_center, CellGeometry, CellProblemResult, Diagnostics};
use crate::error::{Error, Result};
use crate::lattice::{CoefficientField, LatticeFunction, NeighborSet};
use crate::linalg::{default_max_iterations, dense_solve, pcg, QuadraticProblem, ReducedSystem, DEFAULT_TOL};
use crate::membrane::{minimize_bond_graph, BondGraph, GncSchedule};
use crate::par;

/// Tolerance for the closed-form check in [`bulk_density`].
pub const CLOSED_FORM_TOL: f64 = 1e-8;

/// Largest number of enumerable line variables in exact membrane mode.
pub const EXACT_BOND_BUDGET: usize = 18;

#[derive(Debug, Clone)]
pub struct QuadraticCellSystem {
    pub geometry: CellGeometry,
    pub zeta: Vec<f64>,
    /// Edge weights are the indicators `[c > 0]`.
    pub problem: QuadraticProblem,
    pub reduced: ReducedSystem,
    /// `zeta . i` at every node.
    pub affine: Vec<f64>,
}

impl QuadraticCellSystem {
    pub fn free_sites(&self) -> Vec<usize> {
        self.reduced.unknowns.clone()
    }

    /// `A x - b` for the affine candidate.
    pub fn affine_residual(&self) -> Vec<f64> {
        let x: Vec<f64> = self.reduced.unknowns.iter().map(|&n| self.affine[n]).collect();
        let mut ax = vec![0.0; x.len()];
        self.reduced.matrix.mul(&x, &mut ax);
        ax.iter().zip(&self.reduced.rhs).map(|(a, b)| a - b).collect()
    }
}

fn affine_values(geometry: &CellGeometry, zeta: &[f64]) -> Vec<f64> {
    (0..geometry.node_count())
        .map(|n| geometry.position(n).iter().zip(zeta).map(|(x, z)| x * z).sum())
        .collect()
}

pub fn assemble_cell_system(field: &CoefficientField, size: usize, zeta: &[f64]) -> Result<QuadraticCellSystem> {
    assemble_cell_system_at(field, size, zeta, &default_center(field.dim()))
}

pub fn assemble_cell_system_at(
    field: &CoefficientField,
    size: usize,
    zeta: &[f64],
    center: &[f64],
) -> Result<QuadraticCellSystem> {
    if zeta.len() != field.dim() || zeta.iter().any(|z| !z.is_finite()) {
        return Err(Error::InvalidParameter("slope must be a finite vector of the field dimension".into()));
    }
    let geometry = CellGeometry::new(field, size, None, center)?;
    let affine = affine_values(&geometry, zeta);
    let fixed = (0..geometry.node_count())
        .map(|n| (!geometry.free[n]).then_some(affine[n]))
        .collect();
    let mut problem = QuadraticProblem::new(fixed);
    problem.edges = geometry.bonds.iter().map(|b| (b.from, b.to, 1.0)).collect();
    let reduced = problem.reduce();
    Ok(QuadraticCellSystem { geometry, zeta: zeta.to_vec(), problem, reduced, affine })
}

fn node_function(geometry: &CellGeometry, values: Vec<f64>) -> Result<LatticeFunction> {
    let entries = geometry.sites.iter().cloned().zip(values).collect();
    LatticeFunction::from_sites(geometry.dim(), 1.0, entries)
}

/// Minimizes the assembled quadratic form by preconditioned CG, starting
/// from the affine competitor.
pub fn solve_cell(system: &QuadraticCellSystem, tol: f64) -> Result<CellProblemResult<LatticeFunction>> {
    let start = Instant::now();
    let sys = &system.reduced;
    let mut x: Vec<f64> = sys.unknowns.iter().map(|&n| system.affine[n]).collect();
    let max_iter = default_max_iterations(x.len());
    let stats = pcg(&sys.matrix, &sys.rhs, &mut x, tol, max_iter)?;
    let values = system.problem.expand(sys, &x);
    let energy = system.problem.energy(&values);
    let size = system.geometry.size;
    Ok(CellProblemResult {
        size,
        value: energy / (size as f64).powi(system.geometry.dim() as i32),
        energy,
        minimizer: node_function(&system.geometry, values)?,
        diagnostics: Diagnostics {
            iterations: stats.iterations,
            residual: stats.residual,
            cut_edges: None,
            elapsed: start.elapsed(),
        },
    })
}

/// `sum_{xi in V} (xi . zeta)^2`.
pub fn closed_form_density(neighbors: &NeighborSet, zeta: &[f64]) -> Result<f64> {
    if zeta.len() != neighbors.dim() {
        return Err(Error::InvalidParameter("slope has wrong dimension".into()));
    }
    Ok(neighbors
        .vectors()
        .iter()
        .map(|xi| xi.iter().zip(zeta).map(|(a, z)| *a as f64 * z).sum::<f64>().powi(2))
        .sum())
}

#[derive(Debug, Clone)]
pub struct BulkDensity {
    pub zeta: Vec<f64>,
    pub samples: Vec<CellProblemResult<LatticeFunction>>,
    pub estimate: f64,
    /// Present when every coefficient on `V` is positive.
    pub closed_form: Option<f64>,
}

pub fn bulk_density(field: &CoefficientField, zeta: &[f64], sizes: &[usize]) -> Result<BulkDensity> {
    if sizes.is_empty() {
        return Err(Error::InvalidParameter("at least one cell size is required".into()));
    }
    let samples: Vec<_> = par::map(sizes, |&t| solve_cell(&assemble_cell_system(field, t, zeta)?, DEFAULT_TOL))
        .into_iter()
        .collect::<Result<_>>()?;
    let estimate = samples.last().unwrap().value;
    let closed_form = if field.fully_positive() {
        let expected = closed_form_density(field.neighbors(), zeta)?;
        if (estimate - expected).abs() > CLOSED_FORM_TOL * expected.max(1.0) {
            return Err(Error::ClosedFormMismatch { computed: estimate, expected });
        }
        Some(expected)
    } else {
        None
    };
    Ok(BulkDensity { zeta: zeta.to_vec(), samples, estimate, closed_form })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MembraneMode {
    /// Enumerate every broken/unbroken assignment of the bonds touching a free site.
    Exact,
    /// Graduated non-convexity with alternating minimization.
    Heuristic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MembraneCellValue {
    pub value: f64,
    pub energy: f64,
    pub mode: MembraneMode,
    /// Line variables enumerated (exact) or outer iterations (heuristic).
    pub work: usize,
    pub broken: usize,
}

/// `T^{-d} min F_1(v, Q_T)` with affine boundary data `zeta . i`.
pub fn membrane_cell_density(
    field: &CoefficientField,
    zeta: &[f64],
    size: usize,
    mode: MembraneMode,
) -> Result<MembraneCellValue> {
    let system = assemble_cell_system(field, size, zeta)?;
    let geometry = &system.geometry;
    let norm = (size as f64).powi(geometry.dim() as i32);
    match mode {
        MembraneMode::Exact => {
            let fixed = &system.problem.fixed;
            let (variable, frozen): (Vec<&crate::cell::CellBond>, Vec<_>) = geometry
                .bonds
                .iter()
                .partition(|b| fixed[b.from].is_none() || fixed[b.to].is_none());
            if variable.len() > EXACT_BOND_BUDGET {
                return Err(Error::TooLarge { count: variable.len(), limit: EXACT_BOND_BUDGET });
            }
            let constant: f64 = frozen
                .iter()
                .map(|b| (system.affine[b.to] - system.affine[b.from]).powi(2).min(b.coefficient))
                .sum();
            let evaluate = |mask: usize| -> (f64, usize) {
                let mut q = QuadraticProblem::new(fixed.clone());
                let mut broken_cost = 0.0;
                for (k, b) in variable.iter().enumerate() {
                    if mask >> k & 1 == 1 {
                        broken_cost += b.coefficient;
                    } else {
                        q.edges.push((b.from, b.to, 1.0));
                    }
                }
                let sys = q.reduce();
                let x = dense_solve(sys.matrix.to_dense(), sys.rhs.clone());
                let v = q.expand(&sys, &x);
                (q.energy(&v) + broken_cost, mask.count_ones() as usize)
            };
            let results = par::map_range(1usize << variable.len(), evaluate);
            let (best, broken) = results
                .into_iter()
                .fold((f64::INFINITY, 0), |acc, r| if r.0 < acc.0 { r } else { acc });
            let energy = best + constant;
            Ok(MembraneCellValue { value: energy / norm, energy, mode, work: variable.len(), broken })
        }
        MembraneMode::Heuristic => {
            let graph = BondGraph {
                dim: geometry.dim(),
                eps: 1.0,
                fixed: system.problem.fixed.clone(),
                bonds: geometry.bonds.iter().map(|b| (b.from, b.to, b.coefficient)).collect(),
                anchors: Vec::new(),
            };
            let run = minimize_bond_graph(&graph, &system.affine, &GncSchedule::default(), 200)?;
            let energy = graph.energy(&run.values);
            Ok(MembraneCellValue {
                value: energy / norm,
                energy,
                mode,
                work: run.trace.len(),
                broken: run.broken.iter().filter(|&&b| b).count(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nn(c: f64) -> CoefficientField {
        CoefficientField::uniform(NeighborSet::nearest(2), c).unwrap()
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(closed_form_density(&NeighborSet::nearest(2), &[2.0, 1.0]).unwrap(), 5.0);
        assert_eq!(closed_form_density(&NeighborSet::planar_with_diagonals(), &[1.0, 0.0]).unwrap(), 3.0);
        assert_eq!(closed_form_density(&NeighborSet::nearest(2), &[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn affine_candidate_is_exact_for_full_graphs() {
        let sys = assemble_cell_system(&nn(1.0), 6, &[2.0, 1.0]).unwrap();
        assert!(sys.reduced.matrix.is_symmetric(0.0));
        assert!(sys.affine_residual().iter().all(|r| r.abs() < 1e-12));
        let res = solve_cell(&sys, 1e-10).unwrap();
        assert!((res.value - 5.0).abs() < 1e-12);
    }

    #[test]
    fn zero_slope_gives_zero() {
        let sys = assemble_cell_system(&nn(1.0), 4, &[0.0, 0.0]).unwrap();
        assert!(sys.reduced.rhs.iter().all(|&b| b == 0.0));
        assert_eq!(solve_cell(&sys, 1e-10).unwrap().value, 0.0);
    }

    #[test]
    fn bulk_density_checks_closed_form() {
        let b = bulk_density(&nn(2.0), &[2.0, 1.0], &[4, 8]).unwrap();
        assert_eq!(b.closed_form, Some(5.0));
        assert!((b.estimate - 5.0).abs() < 1e-8);
    }

    #[test]
    fn checkerboard_diagonals_sit_between() {
        let field = CoefficientField::from_fn(NeighborSet::planar_with_diagonals(), 2, |r, k| {
            if k < 2 || (r[0] + r[1]) % 2 == 0 { 1.0 } else { 0.0 }
        })
        .unwrap();
        let zeta = [1.0, 0.5];
        let mixed = bulk_density(&field, &zeta, &[12]).unwrap().estimate;
        let lo = closed_form_density(&NeighborSet::nearest(2), &zeta).unwrap();
        let hi = closed_form_density(&NeighborSet::planar_with_diagonals(), &zeta).unwrap();
        assert!(lo < mixed && mixed < hi, "{lo} {mixed} {hi}");
        let doubled = bulk_density(&field, &[2.0, 1.0], &[12]).unwrap().estimate;
        assert!((doubled - 4.0 * mixed).abs() < 1e-9);
    }

    #[test]
    fn exact_membrane_matches_elastic_for_small_slopes() {
        let zeta = [0.3, 0.2];
        let h = membrane_cell_density(&nn(1.0), &zeta, 3, MembraneMode::Exact).unwrap();
        let f = solve_cell(&assemble_cell_system(&nn(1.0), 3, &zeta).unwrap(), 1e-12).unwrap();
        assert!((h.value - f.value).abs() < 1e-10);
        assert_eq!(h.broken, 0);
    }

    #[test]
    fn steep_slopes_break_bonds() {
        let zeta = [5.0, 0.0];
        let h = membrane_cell_density(&nn(1.0), &zeta, 4, MembraneMode::Exact).unwrap();
        let f = bulk_density(&nn(1.0), &zeta, &[4]).unwrap().estimate;
        assert!(h.value < f);
        let g = membrane_cell_density(&nn(1.0), &zeta, 4, MembraneMode::Heuristic).unwrap();
        assert!(g.value >= h.value - 1e-12);
    }

    #[test]
    fn exact_mode_refuses_large_cells() {
        let err = membrane_cell_density(&nn(1.0), &[0.1, 0.1], 6, MembraneMode::Exact).unwrap_err();
        assert!(matches!(err, Error::TooLarge { .. }));
    }
}
