//! Lattice-point counts in dilated sets against the volume bound
//! `#(E_rho ∩ eps Z^d) <= C_d |E_rho| / (eps ∧ rho)^d` with `C_d = 4^d / |B_1|`.

use super::geometry::{for_each_in_box, physical};
use crate::error::{Error, Result};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DilationCount {
    pub count: usize,
    /// Quadrature estimate of `|E_rho|`.
    pub volume: f64,
    pub bound: f64,
    pub bound_satisfied: bool,
}

/// Volume of the unit ball of `R^d`.
pub fn unit_ball_volume(dim: usize) -> f64 {
    match dim {
        0 => 1.0,
        1 => 2.0,
        d => unit_ball_volume(d - 2) * 2.0 * std::f64::consts::PI / d as f64,
    }
}

/// `4^d / |B_1|`.
pub fn cardinality_constant(dim: usize) -> f64 {
    4f64.powi(dim as i32) / unit_ball_volume(dim)
}

fn within(p: &[f64], centers: &[Vec<f64>], rho: f64) -> bool {
    let r2 = rho * rho;
    centers
        .iter()
        .any(|c| c.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() <= r2)
}

/// Counts lattice points of `eps Z^d` in the `rho`-dilation of `points` (balls
/// taken closed) and compares with the volume bound. The volume is a
/// midpoint-grid quadrature with spacing `(eps ∧ rho) / 8`.
pub fn count_in_dilation(points: &[Vec<f64>], rho: f64, eps: f64) -> Result<DilationCount> {
    if !(rho.is_finite() && rho > 0.0 && eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidParameter("rho and eps must be positive".into()));
    }
    let Some(first) = points.first() else {
        return Ok(DilationCount { count: 0, volume: 0.0, bound: 0.0, bound_satisfied: true });
    };
    let d = first.len();
    if d == 0 || points.iter().any(|p| p.len() != d || p.iter().any(|x| !x.is_finite())) {
        return Err(Error::InvalidParameter("points must share a positive dimension".into()));
    }
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for p in points {
        for k in 0..d {
            lo[k] = lo[k].min(p[k] - rho);
            hi[k] = hi[k].max(p[k] + rho);
        }
    }

    let lo_i: Vec<i64> = lo.iter().map(|x| (x / eps).floor() as i64).collect();
    let hi_i: Vec<i64> = hi.iter().map(|x| (x / eps).ceil() as i64).collect();
    let mut count = 0;
    for_each_in_box(&lo_i, &hi_i, |idx| {
        if within(&physical(idx, eps), points, rho) {
            count += 1;
        }
    });

    let h = eps.min(rho) / 8.0;
    let cells: Vec<usize> = lo.iter().zip(&hi).map(|(a, b)| ((b - a) / h).ceil() as usize).collect();
    // Parallel over slabs of the first axis.
    let slab_counts = par::map_range(cells[0], |i0| {
        let mut n = 0usize;
        let rest_hi: Vec<i64> = cells[1..].iter().map(|&c| c as i64 - 1).collect();
        let rest_lo = vec![0i64; d - 1];
        let mut p = vec![0.0; d];
        p[0] = lo[0] + (i0 as f64 + 0.5) * h;
        for_each_in_box(&rest_lo, &rest_hi, |idx| {
            for (k, &j) in idx.iter().enumerate() {
                p[k + 1] = lo[k + 1] + (j as f64 + 0.5) * h;
            }
            if within(&p, points, rho) {
                n += 1;
            }
        });
        n
    });
    let volume = slab_counts.iter().sum::<usize>() as f64 * h.powi(d as i32);
    let bound = cardinality_constant(d) * volume / eps.min(rho).powi(d as i32);
    Ok(DilationCount { count, volume, bound, bound_satisfied: count as f64 <= bound })
}
