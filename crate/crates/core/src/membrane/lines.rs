//! Line-process minimization of `F_eps(u) + weight * sum eps^d (u - g)^2`.
//!
//! Each bond potential `min(z^2, alpha)` (with `z = D^xi u`, `alpha = c/eps`)
//! is replaced during continuation by a spline `g_s` with `g_1 = min(z^2, alpha)`:
//!
//! ```text
//! g_s(t) = t^2                          |t| < q
//!        = alpha - (k/2)(|t| - r)^2     q <= |t| < r
//!        = alpha                        |t| >= r
//! ```
//!
//! with `q = sqrt(alpha)/s`, `r = s sqrt(alpha)`, `k = 2/(s^2 - 1)`. As a function of
//! `t^2` every `g_s` is concave, so `g_s(t) = min_{b in [0,1]} b t^2 + psi_s(b)` and
//! alternating between the weights `b` and the values `u` never raises the
//! joint energy.

use crate::error::{Error, Result};
use crate::energies::{fidelity_energy, weak_membrane_energy};
use crate::lattice::{CoefficientField, LatticeFunction, Site};
use crate::linalg::{QuadraticProblem, DEFAULT_TOL};

/// Continuation parameters, strictly decreasing and ending at `1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GncSchedule {
    stages: Vec<f64>,
}

impl GncSchedule {
    pub fn new(stages: Vec<f64>) -> Result<Self> {
        if stages.is_empty() || *stages.last().unwrap() != 1.0 {
            return Err(Error::InvalidParameter("schedule must end at 1".into()));
        }
        if stages.iter().any(|s| !s.is_finite() || *s < 1.0) {
            return Err(Error::InvalidParameter("schedule entries must be finite and >= 1".into()));
        }
        if stages.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::InvalidParameter("schedule must be strictly decreasing".into()));
        }
        Ok(Self { stages })
    }

    /// `s = sqrt(1 + p)` for `p` in `{64, 16, 4, 1, 0}`.
    pub fn from_sharpness(ps: &[f64]) -> Result<Self> {
        Self::new(ps.iter().map(|p| (1.0 + p).sqrt()).collect())
    }

    /// The true truncated potential only.
    pub fn direct() -> Self {
        Self { stages: vec![1.0] }
    }

    pub fn stages(&self) -> &[f64] {
        &self.stages
    }
}

impl Default for GncSchedule {
    fn default() -> Self {
        Self::from_sharpness(&[64.0, 16.0, 4.0, 1.0, 0.0]).unwrap()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Spline {
    alpha: f64,
    q: f64,
    r: f64,
    k: f64,
}

impl Spline {
    fn new(alpha: f64, s: f64) -> Self {
        let root = alpha.sqrt();
        let k = if s > 1.0 { 2.0 / (s * s - 1.0) } else { f64::INFINITY };
        Self { alpha, q: root / s, r: root * s, k }
    }

    fn value(&self, t: f64) -> f64 {
        let a = t.abs();
        if a <= self.q {
            a * a
        } else if a < self.r {
            self.alpha - 0.5 * self.k * (a - self.r).powi(2)
        } else {
            self.alpha
        }
    }

    /// Optimal half-quadratic weight at `t` (ties keep the spring).
    fn weight(&self, t: f64) -> f64 {
        let a = t.abs();
        if a <= self.q {
            1.0
        } else if a >= self.r {
            0.0
        } else {
            (0.5 * self.k * (self.r / a - 1.0)).clamp(0.0, 1.0)
        }
    }

    /// `psi(b) = sup_y g(sqrt y) - b y`.
    fn dual(&self, b: f64) -> f64 {
        if b >= 1.0 {
            0.0
        } else if b <= 0.0 {
            self.alpha
        } else {
            let y = (self.r / (1.0 + 2.0 * b / self.k)).powi(2);
            self.value(y.sqrt()) - b * y
        }
    }
}

/// Bonds between nodes with optional Dirichlet values and fidelity anchors.
#[derive(Debug, Clone)]
pub struct BondGraph {
    pub dim: usize,
    pub eps: f64,
    pub fixed: Vec<Option<f64>>,
    /// `(from, to, c)` with `c > 0`.
    pub bonds: Vec<(usize, usize, f64)>,
    /// `(node, weight, target)`, contributing `weight * (u - target)^2`.
    pub anchors: Vec<(usize, f64, f64)>,
}

impl BondGraph {
    fn scale(&self) -> f64 {
        self.eps.powi(self.dim as i32)
    }

    fn quotient(&self, v: &[f64], bond: (usize, usize, f64)) -> f64 {
        (v[bond.1] - v[bond.0]) / self.eps
    }

    /// True weak-membrane energy plus anchors.
    pub fn energy(&self, v: &[f64]) -> f64 {
        let membrane: f64 = self
            .bonds
            .iter()
            .map(|&b| self.quotient(v, b).powi(2).min(b.2 / self.eps))
            .sum();
        membrane * self.scale() + self.anchor_energy(v)
    }

    fn anchor_energy(&self, v: &[f64]) -> f64 {
        self.anchors.iter().map(|&(n, w, g)| w * (v[n] - g).powi(2)).sum()
    }

    /// `(D u)^2 > c/eps`, strictly.
    pub fn broken(&self, v: &[f64]) -> Vec<bool> {
        self.bonds.iter().map(|&b| self.quotient(v, b).powi(2) > b.2 / self.eps).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HalfStep {
    Lines,
    Values,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub stage: usize,
    pub s: f64,
    pub step: HalfStep,
    /// Joint energy of the relaxed problem; at `s = 1` this is the true energy.
    pub energy: f64,
}

#[derive(Debug, Clone)]
pub struct GraphRun {
    pub values: Vec<f64>,
    pub broken: Vec<bool>,
    pub trace: Vec<TraceEntry>,
    pub outer_iterations: usize,
    pub converged: bool,
}

const STALL_TOL: f64 = 1e-12;

fn joint_energy(graph: &BondGraph, splines: &[Spline], weights: &[f64], v: &[f64]) -> f64 {
    let bonds: f64 = graph
        .bonds
        .iter()
        .zip(splines.iter().zip(weights))
        .map(|(&bond, (sp, &b))| b * graph.quotient(v, bond).powi(2) + sp.dual(b))
        .sum();
    bonds * graph.scale() + graph.anchor_energy(v)
}

fn solve_values(graph: &BondGraph, weights: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    let w_scale = graph.eps.powi(graph.dim as i32 - 2);
    let mut touched = vec![false; v.len()];
    for &(n, w, _) in &graph.anchors {
        touched[n] |= w > 0.0;
    }
    let mut q = QuadraticProblem::new(graph.fixed.clone());
    for (&(a, b, _), &w) in graph.bonds.iter().zip(weights) {
        if w > 0.0 {
            q.edges.push((a, b, w * w_scale));
            touched[a] = true;
            touched[b] = true;
        }
    }
    // Nodes cut loose from everything keep their value.
    for (n, f) in q.fixed.iter_mut().enumerate() {
        if f.is_none() && !touched[n] {
            *f = Some(v[n]);
        }
    }
    q.anchors = graph.anchors.clone();
    Ok(q.minimize(v, DEFAULT_TOL)?.0)
}

/// Alternating minimization over the continuation schedule, starting from `start`
/// (fixed nodes are reset to their prescribed values). `max_outer` bounds the
/// number of value/line rounds per stage.
pub fn minimize_bond_graph(
    graph: &BondGraph,
    start: &[f64],
    schedule: &GncSchedule,
    max_outer: usize,
) -> Result<GraphRun> {
    if start.len() != graph.fixed.len() {
        return Err(Error::InvalidParameter("start vector has wrong length".into()));
    }
    if max_outer == 0 {
        return Err(Error::InvalidParameter("max_outer must be positive".into()));
    }
    let mut v: Vec<f64> = start.iter().zip(&graph.fixed).map(|(x, f)| f.unwrap_or(*x)).collect();
    let mut trace = Vec::new();
    let mut outer_iterations = 0;
    let mut converged = false;
    for (stage, &s) in schedule.stages().iter().enumerate() {
        let splines: Vec<Spline> = graph.bonds.iter().map(|b| Spline::new(b.2 / graph.eps, s)).collect();
        let update = |v: &[f64]| -> Vec<f64> {
            graph.bonds.iter().zip(&splines).map(|(&b, sp)| sp.weight(graph.quotient(v, b))).collect()
        };
        let mut weights = update(&v);
        let mut energy = joint_energy(graph, &splines, &weights, &v);
        trace.push(TraceEntry { stage, s, step: HalfStep::Lines, energy });
        converged = false;
        for _ in 0..max_outer {
            outer_iterations += 1;
            let before = energy;
            let candidate = solve_values(graph, &weights, &v)?;
            let e = joint_energy(graph, &splines, &weights, &candidate);
            if e <= energy {
                v = candidate;
                energy = e;
            }
            trace.push(TraceEntry { stage, s, step: HalfStep::Values, energy });
            weights = update(&v);
            energy = joint_energy(graph, &splines, &weights, &v);
            trace.push(TraceEntry { stage, s, step: HalfStep::Lines, energy });
            if before - energy <= STALL_TOL * before.abs().max(f64::MIN_POSITIVE) {
                converged = true;
                break;
            }
        }
    }
    let broken = graph.broken(&v);
    Ok(GraphRun { values: v, broken, trace, outer_iterations, converged })
}

/// One bond of a line field; `broken` is the line variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineBond {
    pub site: Site,
    pub neighbor: usize,
    pub broken: bool,
}

/// Line variables on the bonds with `c > 0`, in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LineField {
    pub bonds: Vec<LineBond>,
}

impl LineField {
    pub fn broken_count(&self) -> usize {
        self.bonds.iter().filter(|b| b.broken).count()
    }

    pub fn is_broken(&self, site: &[i64], neighbor: usize) -> Option<bool> {
        self.bonds
            .iter()
            .find(|b| b.site == site && b.neighbor == neighbor)
            .map(|b| b.broken)
    }
}

/// Bond graph of `F_eps(u) + weight * fidelity(u, g)` over the sites of `g`.
pub(crate) fn fidelity_graph(
    g: &LatticeFunction,
    field: &CoefficientField,
    weight: f64,
) -> Result<(BondGraph, Vec<(Site, usize)>)> {
    if !(weight > 0.0 && weight.is_finite()) {
        return Err(Error::InvalidParameter("fidelity weight must be positive".into()));
    }
    if g.dim() != field.dim() {
        return Err(Error::InvalidParameter("data and field dimensions differ".into()));
    }
    if let Some(k) = g.values().iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidField(format!("data value at {:?} is not finite", g.sites()[k])));
    }
    let mut bonds = Vec::new();
    let mut labels = Vec::new();
    for (n, site) in g.sites().iter().enumerate() {
        for (k, xi) in field.neighbors().vectors().iter().enumerate() {
            let c = field.at_index(site, k);
            if c <= 0.0 {
                continue;
            }
            let j: Site = site.iter().zip(xi).map(|(a, b)| a + b).collect();
            if let Some(m) = g.position(&j) {
                bonds.push((n, m, c));
                labels.push((site.clone(), k));
            }
        }
    }
    let mass = weight * g.eps().powi(g.dim() as i32);
    let anchors = g.values().iter().enumerate().map(|(n, &v)| (n, mass, v)).collect();
    let graph = BondGraph { dim: g.dim(), eps: g.eps(), fixed: vec![None; g.len()], bonds, anchors };
    Ok((graph, labels))
}

pub(crate) fn line_field(labels: Vec<(Site, usize)>, broken: &[bool]) -> LineField {
    LineField {
        bonds: labels
            .into_iter()
            .zip(broken)
            .map(|((site, neighbor), &broken)| LineBond { site, neighbor, broken })
            .collect(),
    }
}

/// Total objective `F_eps(u) + weight * sum eps^d (u - g)^2`.
pub fn membrane_objective(
    u: &LatticeFunction,
    g: &LatticeFunction,
    field: &CoefficientField,
    weight: f64,
) -> Result<f64> {
    Ok(weak_membrane_energy(u, field, u.region())?.total + weight * fidelity_energy(u, g)?)
}

#[derive(Debug, Clone)]
pub struct MembraneRun {
    pub u: LatticeFunction,
    pub lines: LineField,
    pub trace: Vec<TraceEntry>,
    pub energy: f64,
    pub converged: bool,
}

/// Minimizes `F_eps(u) + weight * sum eps^d (u - g)^2` from `u = g`.
pub fn alternating_minimize(
    g: &LatticeFunction,
    field: &CoefficientField,
    weight: f64,
    schedule: &GncSchedule,
    max_outer: usize,
) -> Result<MembraneRun> {
    alternating_minimize_from(g, g.values(), field, weight, schedule, max_outer)
}

/// As [`alternating_minimize`] with an explicit starting point.
pub fn alternating_minimize_from(
    g: &LatticeFunction,
    start: &[f64],
    field: &CoefficientField,
    weight: f64,
    schedule: &GncSchedule,
    max_outer: usize,
) -> Result<MembraneRun> {
    let (graph, labels) = fidelity_graph(g, field, weight)?;
    let run = minimize_bond_graph(&graph, start, schedule, max_outer)?;
    let u = g.with_values(run.values)?;
    let energy = membrane_objective(&u, g, field, weight)?;
    Ok(MembraneRun { lines: line_field(labels, &run.broken), u, trace: run.trace, energy, converged: run.converged })
}
