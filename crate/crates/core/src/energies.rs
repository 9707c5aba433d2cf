//! The three lattice energies on a region `A`:
//!
//! * weak membrane `F_eps(u, A) = Σ_xi Σ_i eps^d min((D^xi u(i))², c_{i,xi}/eps)`,
//! * spin `E_eps(v, A) = 1/4 Σ_xi Σ_i eps^{d-1} c_{i,xi} (v_{i+eps xi} - v_i)²`,
//! * elastic `H_eps(u, A) = Σ_xi Σ_i eps^d [c_{i,xi} > 0] (D^xi u(i))²`.
//!
//! A bond `(i, i + eps xi)` belongs to `i`: it is counted when `i ∈ Z_eps(A)`
//! and `i + eps xi` lies in the ambient region (by default, where the function
//! is defined). Totals are reduced in lexicographic bond order with
//! compensated summation, so they do not depend on the worker count.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{
    lattice_points, physical, CoefficientField, LatticeFunction, LatticeRegion, Site,
    SpinConfiguration,
};
use crate::par::{self, KahanSum};

/// `min(z², c/eps)`.
pub fn truncated_potential(z: f64, c: f64, eps: f64) -> f64 {
    (z * z).min(c / eps)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BondTerm {
    pub site: Site,
    pub neighbor: usize,
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyBreakdown {
    pub total: f64,
    pub per_bond: Option<Vec<BondTerm>>,
    /// Bonds with `c > 0` whose difference quotient exceeds the threshold,
    /// `(D^xi u)² > c/eps`.
    pub broken_bonds: Vec<(Site, usize)>,
}

impl EnergyBreakdown {
    pub fn broken_bond_count(&self) -> usize {
        self.broken_bonds.len()
    }

    pub fn report(&self) -> EnergyReport {
        EnergyReport { total: self.total, broken_bond_count: self.broken_bond_count() }
    }
}

/// JSON summary of an energy evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyReport {
    pub total: f64,
    pub broken_bond_count: usize,
}

/// One owned bond with both endpoint values.
#[derive(Debug, Clone, Copy)]
struct BondSample {
    neighbor: usize,
    coefficient: f64,
    from: f64,
    to: f64,
}

/// Owned bonds of `u` over `A`, grouped by site in lexicographic order.
fn owned_bonds(
    u: &LatticeFunction,
    field: &CoefficientField,
    region: &LatticeRegion,
    ambient: Option<&LatticeRegion>,
) -> Result<Vec<(Site, Vec<BondSample>)>> {
    if u.dim() != field.dim() || region.dim() != field.dim() {
        return Err(Error::InvalidParameter("function, field and region dimensions differ".into()));
    }
    let eps = u.eps();
    let sites = lattice_points(region, eps)?;
    let vectors = field.neighbors().vectors();
    let per_site = par::map(&sites, |i| -> Result<(Site, Vec<BondSample>)> {
        let from = u.require(i)?;
        let mut bonds = Vec::with_capacity(vectors.len());
        for (k, xi) in vectors.iter().enumerate() {
            let j: Site = i.iter().zip(xi).map(|(a, b)| a + b).collect();
            let counted = match ambient {
                Some(omega) => omega.contains(&physical(&j, eps)),
                None => u.position(&j).is_some(),
            };
            if counted {
                let to = u.require(&j)?;
                bonds.push(BondSample { neighbor: k, coefficient: field.at_index(i, k), from, to });
            }
        }
        Ok((i.clone(), bonds))
    });
    per_site.into_iter().collect()
}

fn membrane(
    u: &LatticeFunction,
    field: &CoefficientField,
    region: &LatticeRegion,
    ambient: Option<&LatticeRegion>,
    keep_per_bond: bool,
) -> Result<EnergyBreakdown> {
    let eps = u.eps();
    let scale = eps.powi(u.dim() as i32);
    let bonds = owned_bonds(u, field, region, ambient)?;
    let mut total = KahanSum::new();
    let mut per_bond = keep_per_bond.then(Vec::new);
    let mut broken = Vec::new();
    for (site, list) in bonds {
        for b in list {
            let z = (b.to - b.from) / eps;
            let term = scale * truncated_potential(z, b.coefficient, eps);
            total.add(term);
            if b.coefficient > 0.0 && z * z > b.coefficient / eps {
                broken.push((site.clone(), b.neighbor));
            }
            if let Some(p) = per_bond.as_mut() {
                p.push(BondTerm { site: site.clone(), neighbor: b.neighbor, contribution: term });
            }
        }
    }
    Ok(EnergyBreakdown { total: total.value(), per_bond, broken_bonds: broken })
}

/// `F_eps(u, A)` with the ambient region taken as the domain of `u`.
pub fn weak_membrane_energy(
    u: &LatticeFunction,
    field: &CoefficientField,
    region: &LatticeRegion,
) -> Result<EnergyBreakdown> {
    membrane(u, field, region, None, true)
}

/// `F_eps(u, A)` counting only bonds that end inside `ambient`.
pub fn weak_membrane_energy_in(
    u: &LatticeFunction,
    field: &CoefficientField,
    region: &LatticeRegion,
    ambient: &LatticeRegion,
) -> Result<EnergyBreakdown> {
    membrane(u, field, region, Some(ambient), true)
}

fn reduce(
    bonds: Vec<(Site, Vec<BondSample>)>,
    term: impl Fn(&BondSample) -> f64,
) -> f64 {
    bonds
        .iter()
        .flat_map(|(_, list)| list.iter().map(&term))
        .collect::<KahanSum>()
        .value()
}

/// `E_eps(v, A)`. Each disagreeing bond costs `eps^{d-1} c`.
pub fn spin_energy(
    v: &SpinConfiguration,
    field: &CoefficientField,
    region: &LatticeRegion,
) -> Result<f64> {
    let u = v.as_function();
    let scale = u.eps().powi(u.dim() as i32 - 1);
    let bonds = owned_bonds(u, field, region, None)?;
    Ok(reduce(bonds, |b| 0.25 * scale * b.coefficient * (b.to - b.from).powi(2)))
}

fn elastic(
    u: &LatticeFunction,
    field: &CoefficientField,
    region: &LatticeRegion,
    ambient: Option<&LatticeRegion>,
) -> Result<f64> {
    let eps = u.eps();
    let scale = eps.powi(u.dim() as i32);
    let bonds = owned_bonds(u, field, region, ambient)?;
    Ok(reduce(bonds, |b| {
        if b.coefficient > 0.0 {
            scale * ((b.to - b.from) / eps).powi(2)
        } else {
            0.0
        }
    }))
}

/// `H_eps(u, A)`: untruncated quadratic energy on the active bonds.
pub fn elastic_energy(
    u: &LatticeFunction,
    field: &CoefficientField,
    region: &LatticeRegion,
) -> Result<f64> {
    elastic(u, field, region, None)
}

pub fn elastic_energy_in(
    u: &LatticeFunction,
    field: &CoefficientField,
    region: &LatticeRegion,
    ambient: &LatticeRegion,
) -> Result<f64> {
    elastic(u, field, region, Some(ambient))
}

/// `Σ_i eps^d |u_i - g_i|²`.
pub fn fidelity_energy(u: &LatticeFunction, g: &LatticeFunction) -> Result<f64> {
    if !u.same_lattice(g) {
        return Err(Error::IncompatibleFunctions(
            "fidelity needs functions on the same sites and spacing".into(),
        ));
    }
    let scale = u.eps().powi(u.dim() as i32);
    Ok(u
        .values()
        .iter()
        .zip(g.values())
        .map(|(a, b)| scale * (a - b) * (a - b))
        .collect::<KahanSum>()
        .value())
}

/// Cut-off weight of the blend: 1 on the inner set where the distance to the
/// cube complement exceeds `(k+1) delta side / K`, 0 where it is at most
/// `k delta side / K`, linear in between. Lipschitz constant `K / (delta side)`.
pub fn cutoff_weight(
    cube: &LatticeRegion,
    big_k: usize,
    k: usize,
    delta: f64,
    x: &[f64],
) -> Result<f64> {
    let (_, side, _) = cube
        .cube_parts()
        .ok_or_else(|| Error::InvalidParameter("cut-off needs a cube region".into()))?;
    let dist = cube.cube_inner_distance(x).unwrap();
    let width = delta * side / big_k as f64;
    Ok(((dist - k as f64 * width) / width).clamp(0.0, 1.0))
}

/// `w(i) = phi_k(i) u(i) + (1 - phi_k(i)) u0(i)`, for `k ∈ {K, ..., 2K-1}`.
pub fn cutoff_blend(
    u: &LatticeFunction,
    u0: &LatticeFunction,
    cube: &LatticeRegion,
    big_k: usize,
    k: usize,
    delta: f64,
) -> Result<LatticeFunction> {
    if big_k == 0 || k < big_k || k >= 2 * big_k {
        return Err(Error::InvalidParameter(format!(
            "cut-off index {k} outside {{{big_k}, ..., {}}}",
            2 * big_k.max(1) - 1
        )));
    }
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidParameter("delta must be positive".into()));
    }
    if !u.same_lattice(u0) {
        return Err(Error::IncompatibleFunctions("blend needs functions on the same sites".into()));
    }
    let eps = u.eps();
    let mut values = Vec::with_capacity(u.len());
    for ((s, a), b) in u.sites().iter().zip(u.values()).zip(u0.values()) {
        let phi = cutoff_weight(cube, big_k, k, delta, &physical(s, eps))?;
        values.push(phi * a + (1.0 - phi) * b);
    }
    u.with_values(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::NeighborSet;
    use rand::{Rng, SeedableRng};

    fn nn(dim: usize) -> CoefficientField {
        CoefficientField::uniform(NeighborSet::nearest(dim), 1.0).unwrap()
    }

    fn cube(dim: usize, side: f64) -> LatticeRegion {
        LatticeRegion::axis_cube(vec![0.25; dim], side).unwrap()
    }

    #[test]
    fn potential_values() {
        assert_eq!(truncated_potential(0.0, 1.0, 1.0), 0.0);
        assert_eq!(truncated_potential(2.0, 1.0, 1.0), 1.0);
        assert_eq!(truncated_potential(1.0, 1.0, 1.0), 1.0);
        assert_eq!(truncated_potential(7.0, 0.0, 0.1), 0.0);
    }

    #[test]
    fn constant_function_has_zero_energies() {
        let q = cube(2, 4.0);
        let u = LatticeFunction::from_fn(q.clone(), 0.5, |_| 3.0).unwrap();
        let f = nn(2);
        assert_eq!(weak_membrane_energy(&u, &f, &q).unwrap().total, 0.0);
        assert_eq!(elastic_energy(&u, &f, &q).unwrap(), 0.0);
        assert_eq!(fidelity_energy(&u, &u).unwrap(), 0.0);
    }

    #[test]
    fn single_truncated_bond() {
        let u = LatticeFunction::from_sites(1, 1.0, vec![(vec![0], 0.0), (vec![1], 10.0)]).unwrap();
        let r = weak_membrane_energy(&u, &nn(1), u.region()).unwrap();
        assert_eq!(r.total, 1.0);
        assert_eq!(r.broken_bonds, vec![(vec![0], 0)]);
        assert_eq!(r.report().broken_bond_count, 1);
    }

    #[test]
    fn affine_without_truncation_counts_bonds() {
        // Side 4 from center 0.25 at eps = 1: sites -1..=2 per axis.
        let q = cube(2, 4.0);
        let zeta = [0.5, -0.3];
        let u = LatticeFunction::from_fn(q.clone(), 1.0, |x| zeta[0] * x[0] + zeta[1] * x[1]).unwrap();
        // Bonds inside a 4x4 block: 12 per direction.
        let expected = 12.0 * (0.25 + 0.09);
        let f = weak_membrane_energy(&u, &nn(2), &q).unwrap();
        assert!((f.total - expected).abs() < 1e-12);
        assert!(f.broken_bonds.is_empty());
        assert!((elastic_energy(&u, &nn(2), &q).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn flat_spin_interface() {
        let t = 6;
        let q = cube(2, t as f64);
        let f = LatticeFunction::from_fn(q.clone(), 1.0, |x| if x[1] >= 0.5 { 1.0 } else { -1.0 }).unwrap();
        let v = SpinConfiguration::new(f).unwrap();
        assert_eq!(spin_energy(&v, &nn(2), &q).unwrap(), t as f64);
    }

    #[test]
    fn spin_energy_matches_bond_by_bond_sum() {
        let field = CoefficientField::from_fn(NeighborSet::planar_with_diagonals(), 2, |r, k| {
            1.0 + (r[0] + 2 * r[1]) as f64 + k as f64 * 0.5
        })
        .unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        for _ in 0..20 {
            let mut entries = Vec::new();
            for a in 0..3 {
                for b in 0..3 {
                    entries.push((vec![a, b], if rng.gen_bool(0.5) { 1i8 } else { -1 }));
                }
            }
            let v = SpinConfiguration::from_sites(2, 1.0, entries.clone()).unwrap();
            let mut brute = 0.0;
            for (s, si) in &entries {
                for (k, xi) in field.neighbors().vectors().iter().enumerate() {
                    let t = vec![s[0] + xi[0], s[1] + xi[1]];
                    if let Some((_, sj)) = entries.iter().find(|(p, _)| *p == t) {
                        if si != sj {
                            brute += field.at_index(s, k);
                        }
                    }
                }
            }
            let e = spin_energy(&v, &field, v.as_function().region()).unwrap();
            assert!((e - brute).abs() < 1e-12);
        }
    }

    #[test]
    fn membrane_never_exceeds_elastic() {
        let field = CoefficientField::alternating_diagonal(false);
        let q = cube(2, 5.0);
        let mut rng = rand::rngs::StdRng::seed_from_u64(9);
        for _ in 0..100 {
            let eps = [1.0, 0.5, 0.25][rng.gen_range(0..3)];
            let amp = rng.gen_range(0.01..3.0);
            let u = LatticeFunction::from_fn(q.clone(), eps, |_| amp * rng_value()).unwrap();
            let f = weak_membrane_energy(&u, &field, &q).unwrap();
            let h = elastic_energy(&u, &field, &q).unwrap();
            assert!(f.total <= h + 1e-12);
            if !f.broken_bonds.is_empty() {
                assert!(f.total < h);
            }
        }
    }

    fn rng_value() -> f64 {
        thread_local! {
            static RNG: std::cell::RefCell<rand::rngs::StdRng> =
                std::cell::RefCell::new(rand::rngs::StdRng::seed_from_u64(77));
        }
        RNG.with(|r| r.borrow_mut().gen_range(-1.0..1.0))
    }

    #[test]
    fn fidelity_sum_and_scaling() {
        let u = LatticeFunction::from_sites(1, 1.0, vec![(vec![0], 1.0), (vec![1], 2.0)]).unwrap();
        let g = u.map(|_| 0.0).unwrap();
        assert_eq!(fidelity_energy(&u, &g).unwrap(), 5.0);

        // Same physical samples on a twice finer grid give eps^d times the count.
        let q = LatticeRegion::axis_cube(vec![0.0, 0.0], 2.0).unwrap();
        let coarse = LatticeFunction::from_fn(q.clone(), 0.5, |_| 1.0).unwrap();
        let fine = LatticeFunction::from_fn(q, 0.25, |_| 1.0).unwrap();
        let zc = coarse.map(|_| 0.0).unwrap();
        let zf = fine.map(|_| 0.0).unwrap();
        let ec = fidelity_energy(&coarse, &zc).unwrap();
        let ef = fidelity_energy(&fine, &zf).unwrap();
        assert_eq!(ec, coarse.len() as f64 * 0.25);
        assert_eq!(ef, fine.len() as f64 * 0.0625);
    }

    #[test]
    fn fidelity_requires_same_lattice() {
        let a = LatticeFunction::from_sites(1, 1.0, vec![(vec![0], 1.0)]).unwrap();
        let b = LatticeFunction::from_sites(1, 0.5, vec![(vec![0], 1.0)]).unwrap();
        assert!(matches!(fidelity_energy(&a, &b), Err(Error::IncompatibleFunctions(_))));
    }

    #[test]
    fn missing_neighbor_inside_ambient_is_reported() {
        let u = LatticeFunction::from_sites(1, 1.0, vec![(vec![0], 0.0)]).unwrap();
        let ambient = LatticeRegion::axis_cube(vec![0.5], 3.0).unwrap();
        match weak_membrane_energy_in(&u, &nn(1), u.region(), &ambient) {
            Err(Error::IncompleteFunction { site }) => assert_eq!(site, vec![1]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn blend_support() {
        let q = LatticeRegion::axis_cube(vec![0.0, 0.0], 4.0).unwrap();
        let u = LatticeFunction::from_fn(q.clone(), 0.25, |x| x[0] + 10.0).unwrap();
        let u0 = LatticeFunction::from_fn(q.clone(), 0.25, |x| -x[1]).unwrap();
        let (big_k, k, delta) = (2, 3, 0.2);
        let w = cutoff_blend(&u, &u0, &q, big_k, k, delta).unwrap();
        for (idx, s) in w.sites().iter().enumerate() {
            let x = physical(s, 0.25);
            let dist = q.cube_inner_distance(&x).unwrap();
            if dist >= (k + 1) as f64 * delta * 4.0 / big_k as f64 {
                assert_eq!(w.values()[idx], u.values()[idx]);
            }
            if dist <= k as f64 * delta * 4.0 / big_k as f64 {
                assert_eq!(w.values()[idx], u0.values()[idx]);
            }
        }
        let same = cutoff_blend(&u, &u, &q, big_k, k, delta).unwrap();
        for (a, b) in same.values().iter().zip(u.values()) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
        assert!(cutoff_blend(&u, &u0, &q, 2, 4, 0.2).is_err());
        assert!(cutoff_blend(&u, &u0, &q, 2, 1, 0.2).is_err());
    }
}
