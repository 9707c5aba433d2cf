//! Two-valued thresholding by a level chosen to minimize the straddling set
//! `I_t = { (i, xi) : min(u_i, u_{i+xi}) <= t <= max(u_i, u_{i+xi}), |u_{i+xi} - u_i| <= sqrt(c eps) }`.

use crate::error::{Error, Result};
use crate::lattice::{lattice_points, CoefficientField, LatticeFunction, LatticeRegion, Site};

pub const DEFAULT_LEVELS: usize = 64;

#[derive(Debug, Clone)]
pub struct Threshold {
    /// `z2` where `u > t`, `z1` elsewhere.
    pub w: LatticeFunction,
    pub t: f64,
    pub i_count: usize,
    /// Every scanned level with its count.
    pub levels: Vec<(f64, usize)>,
    /// Members of `I_t` at the chosen level.
    pub straddling: Vec<(Site, usize)>,
}

struct Bond {
    site: Site,
    neighbor: usize,
    lo: f64,
    hi: f64,
    unbroken: bool,
}

fn bonds(u: &LatticeFunction, field: &CoefficientField, region: &LatticeRegion) -> Result<Vec<Bond>> {
    let eps = u.eps();
    let mut out = Vec::new();
    for site in lattice_points(region, eps)? {
        let a = u.require(&site)?;
        for (k, xi) in field.neighbors().vectors().iter().enumerate() {
            let j: Site = site.iter().zip(xi).map(|(p, q)| p + q).collect();
            if let Some(b) = u.get(&j) {
                let c = field.at_index(&site, k);
                out.push(Bond {
                    site: site.clone(),
                    neighbor: k,
                    lo: a.min(b),
                    hi: a.max(b),
                    unbroken: (b - a).abs() <= (c * eps).sqrt(),
                });
            }
        }
    }
    Ok(out)
}

fn in_set(b: &Bond, t: f64) -> bool {
    b.unbroken && b.lo <= t && t <= b.hi
}

/// Levels `t` scanned uniformly in `[z1 + (z2 - z1)/4, z2 - (z2 - z1)/4]`.
pub fn threshold_levels(z1: f64, z2: f64, n_levels: usize) -> Vec<f64> {
    let (lo, span) = (z1 + 0.25 * (z2 - z1), 0.5 * (z2 - z1));
    if n_levels == 1 {
        return vec![lo + 0.5 * span];
    }
    (0..n_levels).map(|k| lo + span * k as f64 / (n_levels - 1) as f64).collect()
}

pub fn coarea_threshold(
    u: &LatticeFunction,
    z1: f64,
    z2: f64,
    field: &CoefficientField,
    region: &LatticeRegion,
    n_levels: usize,
) -> Result<Threshold> {
    if !(z1 < z2) {
        return Err(Error::InvalidParameter("threshold needs z1 < z2".into()));
    }
    if n_levels == 0 {
        return Err(Error::InvalidParameter("n_levels must be positive".into()));
    }
    let bonds = bonds(u, field, region)?;
    let levels: Vec<(f64, usize)> = threshold_levels(z1, z2, n_levels)
        .into_iter()
        .map(|t| (t, bonds.iter().filter(|b| in_set(b, t)).count()))
        .collect();
    let &(t, i_count) = levels.iter().min_by_key(|(_, c)| *c).unwrap();
    let w = u.map(|x| if x > t { z2 } else { z1 })?;
    let straddling = bonds
        .iter()
        .filter(|b| in_set(b, t))
        .map(|b| (b.site.clone(), b.neighbor))
        .collect();
    Ok(Threshold { w, t, i_count, levels, straddling })
}
