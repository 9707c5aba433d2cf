//! Geometry shared by the cell problems.
//!
//! A cell is the open cube `Q = Q_T^nu(x0)` at unit spacing. Every bond
//! `(i, i + xi)` with `i ∈ Z_1(Q)` and `c_{i,xi} > 0` is counted. Sites of `Q`
//! closer than `eta = max |xi|` to the complement form a frozen layer and
//! every site outside `Q` reached by a counted bond is frozen as well; the
//! remaining sites are free. With this layer each free site sees all of its
//! bonds in both directions.

use std::collections::HashMap;
use std::time::Duration;

use crate::error::{Error, Result};
use crate::lattice::{lattice_points, physical, CoefficientField, LatticeRegion, Site};

/// Default cube center. With this offset an axis cube of integer side `T`
/// contains exactly `T^d` sites and no site lies on the cube boundary.
pub const DEFAULT_CENTER_OFFSET: f64 = 0.25;

pub fn default_center(dim: usize) -> Vec<f64> {
    vec![DEFAULT_CENTER_OFFSET; dim]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellBond {
    pub from: usize,
    pub to: usize,
    pub neighbor: usize,
    pub coefficient: f64,
}

#[derive(Debug, Clone)]
pub struct CellGeometry {
    pub size: usize,
    pub center: Vec<f64>,
    pub region: LatticeRegion,
    /// Width of the frozen layer inside the cube.
    pub layer: f64,
    /// Owned sites (sorted) followed by exterior sites in discovery order.
    pub sites: Vec<Site>,
    pub owned: usize,
    pub free: Vec<bool>,
    pub bonds: Vec<CellBond>,
}

impl CellGeometry {
    pub fn new(
        field: &CoefficientField,
        size: usize,
        nu: Option<&[f64]>,
        center: &[f64],
    ) -> Result<Self> {
        let dim = field.dim();
        if size < 2 {
            return Err(Error::InvalidParameter(format!("cell size must be at least 2, got {size}")));
        }
        if center.len() != dim {
            return Err(Error::InvalidParameter("cell center has wrong dimension".into()));
        }
        let region = match nu {
            Some(n) => {
                if n.len() != dim {
                    return Err(Error::InvalidParameter("direction has wrong dimension".into()));
                }
                LatticeRegion::rotated_cube(center.to_vec(), size as f64, n)?
            }
            None => LatticeRegion::axis_cube(center.to_vec(), size as f64)?,
        };
        let layer = field.neighbors().euclidean_range();
        let mut sites = lattice_points(&region, 1.0)?;
        let owned = sites.len();
        let tol = 1e-9;
        let mut free: Vec<bool> = sites
            .iter()
            .map(|s| region.cube_inner_distance(&physical(s, 1.0)).unwrap() > layer + tol)
            .collect();
        let mut index: HashMap<Site, usize> =
            sites.iter().enumerate().map(|(k, s)| (s.clone(), k)).collect();
        let mut bonds = Vec::new();
        for i in 0..owned {
            for (k, xi) in field.neighbors().vectors().iter().enumerate() {
                let c = field.at_index(&sites[i], k);
                if c <= 0.0 {
                    continue;
                }
                let j: Site = sites[i].iter().zip(xi).map(|(a, b)| a + b).collect();
                let to = match index.get(&j) {
                    Some(&n) => n,
                    None => {
                        let n = sites.len();
                        index.insert(j.clone(), n);
                        sites.push(j);
                        free.push(false);
                        n
                    }
                };
                bonds.push(CellBond { from: i, to, neighbor: k, coefficient: c });
            }
        }
        Ok(Self { size, center: center.to_vec(), region, layer, sites, owned, free, bonds })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn node_count(&self) -> usize {
        self.sites.len()
    }

    pub fn free_count(&self) -> usize {
        self.free.iter().filter(|&&f| f).count()
    }

    /// Indices of free nodes, in site order.
    pub fn free_nodes(&self) -> Vec<usize> {
        (0..self.sites.len()).filter(|&n| self.free[n]).collect()
    }

    pub fn position(&self, node: usize) -> Vec<f64> {
        physical(&self.sites[node], 1.0)
    }
}

/// Solver bookkeeping attached to a cell result.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Diagnostics {
    /// Max-flow phases or linear-solver iterations.
    pub iterations: usize,
    /// Certificate gap (max-flow vs. re-summed cut) or relative residual.
    pub residual: f64,
    pub cut_edges: Option<usize>,
    pub elapsed: Duration,
}

/// Normalized minimum of one finite cell problem.
#[derive(Debug, Clone)]
pub struct CellProblemResult<M> {
    pub size: usize,
    pub value: f64,
    pub energy: f64,
    pub minimizer: M,
    pub diagnostics: Diagnostics,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::NeighborSet;

    #[test]
    fn axis_cell_has_t_to_the_d_owned_sites() {
        let f = CoefficientField::uniform(NeighborSet::nearest(2), 1.0).unwrap();
        for t in [2, 3, 4, 7] {
            let g = CellGeometry::new(&f, t, None, &default_center(2)).unwrap();
            assert_eq!(g.owned, t * t);
            assert_eq!(g.free_count(), (t - 2) * (t - 2));
            assert_eq!(g.bonds.len(), 2 * t * t);
        }
    }

    #[test]
    fn free_sites_see_all_their_bonds() {
        let f = CoefficientField::alternating_diagonal(true);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let g = CellGeometry::new(&f, 9, Some(&[s, s]), &default_center(2)).unwrap();
        let mut degree = vec![0usize; g.node_count()];
        for b in &g.bonds {
            degree[b.from] += 1;
            degree[b.to] += 1;
        }
        for n in g.free_nodes() {
            assert_eq!(degree[n], 8);
        }
        assert!(g.free_count() > 0);
    }

    #[test]
    fn rejects_tiny_cells() {
        let f = CoefficientField::uniform(NeighborSet::nearest(2), 1.0).unwrap();
        assert!(CellGeometry::new(&f, 1, None, &default_center(2)).is_err());
    }
}
