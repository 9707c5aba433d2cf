//! Discrete maximal function, discrete gradient and Lipschitz truncation.

use crate::error::{Error, Result};
use crate::lattice::{lattice_points, physical, LatticeFunction, LatticeRegion, Site};
use crate::par;

fn max_norm_distance(a: &[i64], b: &[i64]) -> usize {
    a.iter().zip(b).map(|(x, y)| (x - y).unsigned_abs() as usize).max().unwrap_or(0)
}

/// `M u(x) = sup_eta` of the average of `u` over the sites of the cube
/// `Q_eta(x)`. The cube contents only change when `eta/2` passes a max-norm
/// distance, so the supremum is a maximum over those shells.
pub fn maximal_function(u: &LatticeFunction, region: &LatticeRegion) -> Result<LatticeFunction> {
    let eps = u.eps();
    let sites = lattice_points(region, eps)?;
    let values: Vec<f64> = sites.iter().map(|s| u.require(s)).collect::<Result<_>>()?;
    let out = par::map(&sites, |x| {
        let mut sums: Vec<f64> = Vec::new();
        let mut counts: Vec<usize> = Vec::new();
        for (y, &v) in sites.iter().zip(&values) {
            let r = max_norm_distance(x, y);
            if r >= sums.len() {
                sums.resize(r + 1, 0.0);
                counts.resize(r + 1, 0);
            }
            sums[r] += v;
            counts[r] += 1;
        }
        let (mut s, mut n, mut best) = (0.0, 0usize, f64::NEG_INFINITY);
        for (sr, cr) in sums.iter().zip(&counts) {
            if *cr == 0 {
                continue;
            }
            s += sr;
            n += cr;
            best = best.max(s / n as f64);
        }
        best
    });
    LatticeFunction::from_sites(u.dim(), eps, sites.into_iter().zip(out).collect())
}

/// `|grad u|(x) = sum over nearest neighbours z of |u(x) - u(z)| / |x - z|`.
pub fn discrete_gradient(u: &LatticeFunction) -> Result<LatticeFunction> {
    let eps = u.eps();
    let d = u.dim();
    let values = par::map(u.sites(), |x| {
        let here = u.get(x).unwrap();
        let mut total = 0.0;
        for axis in 0..d {
            for step in [-1, 1] {
                let mut z = x.clone();
                z[axis] += step;
                if let Some(v) = u.get(&z) {
                    total += (here - v).abs() / eps;
                }
            }
        }
        total
    });
    u.with_values(values)
}

/// Calibrated constant in `L = LIPSCHITZ_FACTOR * lambda + 2 |u|_inf / (rho0 - rho)`.
pub const LIPSCHITZ_FACTOR: f64 = 4.0;

#[derive(Debug, Clone)]
pub struct Truncation {
    pub v: LatticeFunction,
    /// `{ M |grad u| <= lambda }` inside the inner cube.
    pub good_set: Vec<Site>,
    pub lipschitz: f64,
    /// Set when the good set is empty and `v` is the conventional zero.
    pub empty: bool,
    pub gradient: LatticeFunction,
    pub maximal: LatticeFunction,
}

/// McShane extension `v(x) = min_{y in E} u(y) + L |x - y|` of `u` restricted
/// to `E = { M |grad u| <= lambda } ∩ Q_rho`. `u` must live on a cube of side `rho0`;
/// `Q_rho` is the concentric cube of side `rho`.
pub fn lipschitz_truncation(u: &LatticeFunction, lambda: f64, rho: f64, rho0: f64) -> Result<Truncation> {
    if !(lambda > 0.0) || !(0.0 < rho && rho < rho0) {
        return Err(Error::InvalidParameter("need lambda > 0 and 0 < rho < rho0".into()));
    }
    let (center, side, rotation) = u
        .region()
        .cube_parts()
        .ok_or_else(|| Error::InvalidParameter("truncation needs a function on a cube".into()))?;
    if (side - rho0).abs() > 1e-9 * rho0 {
        return Err(Error::InvalidParameter(format!("function lives on a cube of side {side}, not {rho0}")));
    }
    let inner = match rotation {
        Some(r) => LatticeRegion::RotatedCube {
            center: center.to_vec(),
            side: rho,
            nu: r.column(u.dim() - 1),
            rotation: r.clone(),
        },
        None => LatticeRegion::axis_cube(center.to_vec(), rho)?,
    };
    let eps = u.eps();
    let gradient = discrete_gradient(u)?;
    let maximal = maximal_function(&gradient, u.region())?;
    let good_set: Vec<Site> = u
        .sites()
        .iter()
        .filter(|s| inner.contains(&physical(s, eps)) && maximal.get(s).is_some_and(|m| m <= lambda))
        .cloned()
        .collect();
    let lipschitz = LIPSCHITZ_FACTOR * lambda + 2.0 * u.sup_norm() / (rho0 - rho);
    let empty = good_set.is_empty();
    let anchors: Vec<(Vec<f64>, f64)> = good_set.iter().map(|s| (physical(s, eps), u.get(s).unwrap())).collect();
    let values = par::map(u.sites(), |x| {
        let p = physical(x, eps);
        anchors
            .iter()
            .map(|(y, uy)| uy + lipschitz * distance(&p, y))
            .fold(if empty { 0.0 } else { f64::INFINITY }, f64::min)
    });
    Ok(Truncation { v: u.with_values(values)?, good_set, lipschitz, empty, gradient, maximal })
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// `max |v(x) - v(y)| / |x - y|` over all site pairs.
pub fn pairwise_lipschitz(v: &LatticeFunction) -> f64 {
    let eps = v.eps();
    let pts: Vec<Vec<f64>> = v.sites().iter().map(|s| physical(s, eps)).collect();
    let vals = v.values();
    par::map_range(pts.len(), |i| {
        (i + 1..pts.len())
            .map(|j| (vals[i] - vals[j]).abs() / distance(&pts[i], &pts[j]))
            .fold(0.0, f64::max)
    })
    .into_iter()
    .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(n: usize) -> (LatticeRegion, f64) {
        let eps = 1.0 / n as f64;
        (LatticeRegion::axis_cube(vec![0.5 - eps / 2.0; 2], 1.0).unwrap(), eps)
    }

    #[test]
    fn constant_maximal_function() {
        let (region, eps) = square(6);
        let u = LatticeFunction::from_fn(region.clone(), eps, |_| 2.5).unwrap();
        let m = maximal_function(&u, &region).unwrap();
        assert!(m.values().iter().all(|&v| (v - 2.5).abs() < 1e-12));
    }

    #[test]
    fn spike_maximal_function() {
        let (region, eps) = square(5);
        let u = LatticeFunction::from_fn(region.clone(), eps, |x| {
            if x[0].abs() < 1e-9 && x[1].abs() < 1e-9 { 1.0 } else { 0.0 }
        })
        .unwrap();
        let m = maximal_function(&u, &region).unwrap();
        assert_eq!(m.get(&[0, 0]), Some(1.0));
        // From (2, 1) the smallest cube reaching the spike has radius 2 and is
        // clipped by the region to 5 x 4 sites.
        assert!((m.get(&[2, 1]).unwrap() - 1.0 / 20.0).abs() < 1e-12);
    }

    #[test]
    fn smooth_functions_are_untouched() {
        let (region, eps) = square(8);
        let u = LatticeFunction::from_fn(region, eps, |x| 0.1 * x[0] - 0.05 * x[1]).unwrap();
        let t = lipschitz_truncation(&u, 10.0, 0.5, 1.0).unwrap();
        let inner = t.good_set.len();
        assert!(inner > 0);
        for s in &t.good_set {
            assert_eq!(t.v.get(s), u.get(s));
        }
        assert!(pairwise_lipschitz(&t.v) <= t.lipschitz * (1.0 + 1e-12));
    }
}
