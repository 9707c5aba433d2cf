//! Sparse symmetric solves for the quadratic cell and smoothing problems.

use crate::error::{Error, Result};

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from unsorted triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
                continue;
            }
            last = Some((r, c));
            row_ptr[r + 1] += 1;
            cols.push(c);
            vals.push(v);
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self { n, row_ptr, cols, vals }
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n)
            .map(|r| self.row(r).filter(|&(c, _)| c == r).map(|(_, v)| v).sum())
            .collect()
    }

    pub fn mul(&self, x: &[f64], y: &mut [f64]) {
        for (r, out) in y.iter_mut().enumerate() {
            *out = self.row(r).map(|(c, v)| v * x[c]).sum();
        }
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|r| {
            self.row(r).all(|(c, v)| {
                let t: f64 = self.row(c).filter(|&(k, _)| k == r).map(|(_, w)| w).sum();
                (t - v).abs() <= tol * v.abs().max(1.0)
            })
        })
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; self.n]; self.n];
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                a[r][c] += v;
            }
        }
        a
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    /// `|b - A x| / |b|` (absolute residual when `b = 0`).
    pub residual: f64,
}

pub const DEFAULT_TOL: f64 = 1e-10;

pub fn default_max_iterations(n: usize) -> usize {
    50 * (n as f64).sqrt().ceil() as usize + 1000
}

/// Jacobi-preconditioned conjugate gradients. `x` holds the warm start on
/// entry and the solution on exit. Each iteration lowers the quadratic
/// objective `x'Ax/2 - b'x`, so a warm start never makes it worse.
pub fn pcg(a: &CsrMatrix, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> Result<SolveStats> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    let n = a.n;
    let bnorm = norm(b);
    let scale = if bnorm > 0.0 { bnorm } else { 1.0 };
    let inv_diag: Vec<f64> = a
        .diagonal()
        .into_iter()
        .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut r = vec![0.0; n];
    a.mul(x, &mut r);
    for k in 0..n {
        r[k] = b[k] - r[k];
    }
    let mut res = norm(&r) / scale;
    if res <= tol || n == 0 {
        return Ok(SolveStats { iterations: 0, residual: res });
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 1..=max_iter {
        a.mul(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::NonConvergence { iterations: it, residual: res });
        }
        let alpha = rz / pap;
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        res = norm(&r) / scale;
        if res <= tol {
            // Confirm against the true residual; recurrences drift.
            a.mul(x, &mut ap);
            let true_res = norm(&b.iter().zip(&ap).map(|(b, y)| b - y).collect::<Vec<_>>()) / scale;
            if true_res <= tol {
                return Ok(SolveStats { iterations: it, residual: true_res });
            }
            for k in 0..n {
                r[k] = b[k] - ap[k];
            }
        }
        for k in 0..n {
            z[k] = r[k] * inv_diag[k];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    Err(Error::NonConvergence { iterations: max_iter, residual: res })
}

/// Dense Gaussian elimination with partial pivoting. Rows whose pivot
/// vanishes (singular directions) get the value 0.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let mut pivots = vec![None; n];
    let mut row = 0;
    for col in 0..n {
        if row == n {
            break;
        }
        let p = (row..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        if a[p][col].abs() <= 1e-13 * scale {
            continue;
        }
        a.swap(row, p);
        b.swap(row, p);
        for i in row + 1..n {
            let f = a[i][col] / a[row][col];
            if f != 0.0 {
                for j in col..n {
                    a[i][j] -= f * a[row][j];
                }
                b[i] -= f * b[row];
            }
        }
        pivots[col] = Some(row);
        row += 1;
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        if let Some(r) = pivots[col] {
            let s: f64 = (col + 1..n).map(|j| a[r][j] * x[j]).sum();
            x[col] = (b[r] - s) / a[r][col];
        }
    }
    x
}

/// Quadratic objective over a node set with some values held fixed:
/// `sum_e w_e (v_a - v_b)^2 + sum_n m_n (v_n - g_n)^2`.
#[derive(Debug, Clone)]
pub struct QuadraticProblem {
    pub fixed: Vec<Option<f64>>,
    pub edges: Vec<(usize, usize, f64)>,
    pub anchors: Vec<(usize, f64, f64)>,
}

/// The reduced system `A x = b` on the free nodes.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// Node index of each unknown.
    pub unknowns: Vec<usize>,
    /// Unknown index of each node, `None` if fixed.
    pub slot: Vec<Option<usize>>,
}

impl QuadraticProblem {
    pub fn new(fixed: Vec<Option<f64>>) -> Self {
        Self { fixed, edges: Vec::new(), anchors: Vec::new() }
    }

    pub fn energy(&self, v: &[f64]) -> f64 {
        let e: f64 = self.edges.iter().map(|&(a, b, w)| w * (v[a] - v[b]).powi(2)).sum();
        let m: f64 = self.anchors.iter().map(|&(n, w, g)| w * (v[n] - g).powi(2)).sum();
        e + m
    }

    /// Half the gradient is `A x - b`, so the reduced system is the
    /// first-order optimality condition.
    pub fn reduce(&self) -> ReducedSystem {
        let mut slot = vec![None; self.fixed.len()];
        let mut unknowns = Vec::new();
        for (n, f) in self.fixed.iter().enumerate() {
            if f.is_none() {
                slot[n] = Some(unknowns.len());
                unknowns.push(n);
            }
        }
        let mut trip = Vec::new();
        let mut rhs = vec![0.0; unknowns.len()];
        for &(a, b, w) in &self.edges {
            if w == 0.0 {
                continue;
            }
            match (slot[a], slot[b]) {
                (Some(i), Some(j)) => {
                    trip.extend([(i, i, w), (j, j, w), (i, j, -w), (j, i, -w)]);
                }
                (Some(i), None) => {
                    trip.push((i, i, w));
                    rhs[i] += w * self.fixed[b].unwrap();
                }
                (None, Some(j)) => {
                    trip.push((j, j, w));
                    rhs[j] += w * self.fixed[a].unwrap();
                }
                (None, None) => {}
            }
        }
        for &(n, w, g) in &self.anchors {
            if let Some(i) = slot[n] {
                trip.push((i, i, w));
                rhs[i] += w * g;
            }
        }
        ReducedSystem { matrix: CsrMatrix::from_triplets(unknowns.len(), trip), rhs, unknowns, slot }
    }

    /// Full node vector from unknown values.
    pub fn expand(&self, system: &ReducedSystem, x: &[f64]) -> Vec<f64> {
        self.fixed
            .iter()
            .enumerate()
            .map(|(n, f)| f.unwrap_or_else(|| x[system.slot[n].unwrap()]))
            .collect()
    }

    /// Minimizes with PCG starting from `start` (a full node vector).
    pub fn minimize(&self, start: &[f64], tol: f64) -> Result<(Vec<f64>, SolveStats)> {
        let sys = self.reduce();
        let mut x: Vec<f64> = sys.unknowns.iter().map(|&n| start[n]).collect();
        let max_iter = default_max_iterations(x.len());
        let stats = pcg(&sys.matrix, &sys.rhs, &mut x, tol, max_iter)?;
        Ok((self.expand(&sys, &x), stats))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
                t.push((i - 1, i, -1.0));
            }
        }
        CsrMatrix::from_triplets(n, t)
    }

    #[test]
    fn pcg_matches_dense() {
        let a = laplacian_1d(30);
        assert!(a.is_symmetric(0.0));
        let b: Vec<f64> = (0..30).map(|i| (i as f64).sin()).collect();
        let mut x = vec![0.0; 30];
        let stats = pcg(&a, &b, &mut x, 1e-12, 1000).unwrap();
        assert!(stats.residual <= 1e-12);
        let y = dense_solve(a.to_dense(), b);
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_rhs_returns_immediately() {
        let mut x = vec![0.0; 5];
        let s = pcg(&laplacian_1d(5), &[0.0; 5], &mut x, 1e-10, 10).unwrap();
        assert_eq!(s.iterations, 0);
    }

    #[test]
    fn dense_solve_skips_singular_directions() {
        let x = dense_solve(vec![vec![1.0, 0.0], vec![0.0, 0.0]], vec![2.0, 0.0]);
        assert_eq!(x, vec![2.0, 0.0]);
    }

    #[test]
    fn single_free_node_averages_neighbors() {
        let mut q = QuadraticProblem::new(vec![Some(1.0), None, Some(4.0)]);
        q.edges.push((0, 1, 1.0));
        q.edges.push((1, 2, 1.0));
        let (v, _) = q.minimize(&[1.0, 0.0, 4.0], 1e-12).unwrap();
        assert!((v[1] - 2.5).abs() < 1e-12);
    }
}
