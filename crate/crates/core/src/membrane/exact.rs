//! Global minimizer on a path by dynamic programming over break positions.

use crate::error::{Error, Result};
use crate::lattice::{CoefficientField, LatticeFunction};

use super::lines::{line_field, membrane_objective, LineField};

#[derive(Debug, Clone)]
pub struct ExactPath {
    pub u: LatticeFunction,
    pub lines: LineField,
    pub energy: f64,
    /// Optimal value found by the recursion (equal to `energy` up to rounding).
    pub dp_value: f64,
}

pub const PATH_LIMIT: usize = 10_000;

/// `a x^2 + b x + e`.
#[derive(Debug, Clone, Copy)]
struct Quadratic {
    a: f64,
    b: f64,
    e: f64,
}

impl Quadratic {
    fn anchor(mass: f64, g: f64) -> Self {
        Self { a: mass, b: -2.0 * mass * g, e: mass * g * g }
    }

    fn minimum(&self) -> f64 {
        self.e - self.b * self.b / (4.0 * self.a)
    }

    /// `min_x [self(x) + w (y - x)^2] + mass (y - g)^2` as a function of `y`.
    fn extend(&self, w: f64, mass: f64, g: f64) -> Self {
        let s = self.a + w;
        let next = Self {
            a: self.a * w / s,
            b: self.b * w / s,
            e: self.e - self.b * self.b / (4.0 * s),
        };
        let add = Self::anchor(mass, g);
        Self { a: next.a + add.a, b: next.b + add.b, e: next.e + add.e }
    }
}

/// Solves `(mass + w deg_i) u_i - w (u_{i-1} + u_{i+1}) = mass g_i` on one segment.
fn smooth_segment(g: &[f64], mass: f64, w: f64) -> Vec<f64> {
    let n = g.len();
    if n == 1 {
        return g.to_vec();
    }
    let diag: Vec<f64> = (0..n)
        .map(|i| mass + w * if i == 0 || i == n - 1 { 1.0 } else { 2.0 })
        .collect();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = -w / diag[0];
    d[0] = mass * g[0] / diag[0];
    for i in 1..n {
        let m = diag[i] + w * c[i - 1];
        c[i] = -w / m;
        d[i] = (mass * g[i] + w * d[i - 1]) / m;
    }
    let mut u = vec![0.0; n];
    u[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        u[i] = d[i] - c[i] * u[i + 1];
    }
    u
}

/// Exact minimum of `F_eps(u) + weight * sum eps (u - g)^2` in `d = 1` with `V = {e_1}`.
pub fn exact_minimize_1d(g: &LatticeFunction, field: &CoefficientField, weight: f64) -> Result<ExactPath> {
    if g.dim() != 1 || field.neighbors().vectors() != [vec![1]] {
        return Err(Error::InvalidParameter("exact path solver needs d = 1 and V = {e_1}".into()));
    }
    if !(weight > 0.0 && weight.is_finite()) {
        return Err(Error::InvalidParameter("fidelity weight must be positive".into()));
    }
    let n = g.len();
    if n > PATH_LIMIT {
        return Err(Error::TooLarge { count: n, limit: PATH_LIMIT });
    }
    let eps = g.eps();
    let mass = weight * eps;
    let w = 1.0 / eps;
    let data = g.values();
    let sites = g.sites();
    // link[k]: bond between sites k and k+1, `Some(c)` with c > 0 if present.
    let link: Vec<Option<f64>> = (0..n.saturating_sub(1))
        .map(|k| {
            let c = field.at_index(&sites[k], 0);
            (sites[k + 1][0] == sites[k][0] + 1 && c > 0.0).then_some(c)
        })
        .collect();
    let mut best = vec![f64::INFINITY; n + 1];
    let mut from = vec![0usize; n + 1];
    best[0] = 0.0;
    for k in 0..n {
        let entry = best[k] + if k > 0 { link[k - 1].unwrap_or(0.0) } else { 0.0 };
        let mut q = Quadratic::anchor(mass, data[k]);
        let mut j = k;
        loop {
            let value = entry + q.minimum();
            if value < best[j + 1] {
                best[j + 1] = value;
                from[j + 1] = k;
            }
            if j + 1 == n || link[j].is_none() {
                break;
            }
            j += 1;
            q = q.extend(w, mass, data[j]);
        }
    }
    let mut cuts = Vec::new();
    let mut j = n;
    while j > 0 {
        cuts.push((from[j], j));
        j = from[j];
    }
    cuts.reverse();
    let mut values = Vec::with_capacity(n);
    for &(a, b) in &cuts {
        values.extend(smooth_segment(&data[a..b], mass, w));
    }
    let u = g.with_values(values)?;
    let broken: Vec<bool> = cuts.iter().skip(1).map(|&(a, _)| a).fold(vec![false; n.saturating_sub(1)], |mut acc, a| {
        acc[a - 1] = true;
        acc
    });
    let labels: Vec<_> = (0..n.saturating_sub(1)).filter(|&k| link[k].is_some()).collect();
    let lines = line_field(
        labels.iter().map(|&k| (sites[k].clone(), 0)).collect(),
        &labels.iter().map(|&k| broken[k]).collect::<Vec<_>>(),
    );
    let energy = membrane_objective(&u, g, field, weight)?;
    Ok(ExactPath { u, lines, energy, dp_value: best[n] })
}
