//! Surface energy density `phi(nu)` from the spin cell problem
//!
//! `phi_T(nu) = T^{1-d} min { E_1(v, Q_T^nu) : v = u_{0,nu} on the frozen sites }`,
//!
//! solved exactly as a minimum s-t cut: every coupling is nonnegative, so the
//! energy is a cut function of the set of `+1` sites.

use std::time::Instant;

use crate::cell::{default_center, CellGeometry, CellProblemResult, Diagnostics};
use crate::energies::spin_energy;
use crate::error::{Error, Result};
use crate::lattice::{jump_value, normalize, CoefficientField, SpinConfiguration};
use crate::maxflow::{FlowGraph, FlowStats};
use crate::par;

/// Max-flow encoding of one spin cell problem. Node `n < geometry.node_count()`
/// is the lattice site `geometry.sites[n]`; `source` carries the `+1` side.
#[derive(Debug, Clone)]
pub struct FlowNetwork {
    pub field: CoefficientField,
    pub geometry: CellGeometry,
    pub nu: Vec<f64>,
    /// Boundary value of frozen nodes, `None` for free ones.
    pub frozen: Vec<Option<i8>>,
    pub graph: FlowGraph,
    pub source: usize,
    pub sink: usize,
    /// Capacity used for terminal arcs of frozen nodes.
    pub infinity: f64,
}

impl FlowNetwork {
    /// Weight of the cut induced by `spins` (one entry per lattice node).
    pub fn cut_value(&self, spins: &[i8]) -> f64 {
        let mut side: Vec<bool> = spins.iter().map(|&s| s > 0).collect();
        side.push(true);
        side.push(false);
        self.graph.cut_capacity(&side)
    }

    pub fn free_count(&self) -> usize {
        self.geometry.free_count()
    }

    /// Spin configuration over all lattice nodes.
    pub fn configuration(&self, spins: &[i8]) -> Result<SpinConfiguration> {
        let entries = self.geometry.sites.iter().cloned().zip(spins.iter().copied()).collect();
        SpinConfiguration::from_sites(self.geometry.dim(), 1.0, entries)
    }
}

/// Builds the cut network for `Q_T^nu(x0)` with jump datum `u_{x0,nu}`.
pub fn build_cut_network(
    field: &CoefficientField,
    size: usize,
    nu: &[f64],
    x0: &[f64],
) -> Result<FlowNetwork> {
    let geometry = CellGeometry::new(field, size, Some(nu), x0)?;
    let n = geometry.node_count();
    let frozen: Vec<Option<i8>> = (0..n)
        .map(|k| {
            (!geometry.free[k]).then(|| jump_value(x0, nu, -1.0, 1.0, &geometry.position(k)) as i8)
        })
        .collect();
    let infinity = field.c_max() * geometry.bonds.len() as f64 + 1.0;
    let (source, sink) = (n, n + 1);
    let mut graph = FlowGraph::new(n + 2);
    for b in &geometry.bonds {
        graph.add_bond(b.from, b.to, b.coefficient);
    }
    for (k, f) in frozen.iter().enumerate() {
        match f {
            Some(1) => {
                graph.add_arc(source, k, infinity);
            }
            Some(_) => {
                graph.add_arc(k, sink, infinity);
            }
            None => {}
        }
    }
    Ok(FlowNetwork { field: field.clone(), geometry, nu: nu.to_vec(), frozen, graph, source, sink, infinity })
}

#[derive(Debug, Clone)]
pub struct GroundState {
    pub energy: f64,
    pub minimizer: SpinConfiguration,
    pub spins: Vec<i8>,
    pub flow: FlowStats,
    /// Energy of the minimizer re-summed bond by bond.
    pub resummed: f64,
    pub cut_edges: usize,
}

/// Exact minimum of `E_1` over admissible spins via max-flow/min-cut.
pub fn min_cut_ground_state(network: &FlowNetwork) -> Result<GroundState> {
    let mut graph = network.graph.clone();
    let flow = graph.max_flow(network.source, network.sink);
    let side = graph.source_side(network.source);
    let n = network.geometry.node_count();
    let spins: Vec<i8> = (0..n).map(|k| if side[k] { 1 } else { -1 }).collect();
    for (k, f) in network.frozen.iter().enumerate() {
        if let Some(v) = f {
            if *v != spins[k] {
                return Err(Error::InvalidParameter(format!(
                    "minimum cut separates frozen node {k} from its terminal"
                )));
            }
        }
    }
    let cut_edges = network
        .geometry
        .bonds
        .iter()
        .filter(|b| spins[b.from] != spins[b.to])
        .count();
    let minimizer = network.configuration(&spins)?;
    let resummed = spin_energy(&minimizer, &network.field, &network.geometry.region)?;
    Ok(GroundState { energy: flow.value, minimizer, spins, flow, resummed, cut_edges })
}

/// Exhaustive minimum over all `2^free` spin assignments (Gray-code order).
pub fn brute_force_ground_state(
    field: &CoefficientField,
    size: usize,
    nu: &[f64],
) -> Result<(f64, SpinConfiguration)> {
    brute_force_ground_state_at(field, size, nu, &default_center(field.dim()))
}

pub const BRUTE_FORCE_LIMIT: usize = 20;

pub fn brute_force_ground_state_at(
    field: &CoefficientField,
    size: usize,
    nu: &[f64],
    x0: &[f64],
) -> Result<(f64, SpinConfiguration)> {
    let geometry = CellGeometry::new(field, size, Some(nu), x0)?;
    let free = geometry.free_nodes();
    if free.len() > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge { count: free.len(), limit: BRUTE_FORCE_LIMIT });
    }
    let n = geometry.node_count();
    let mut spins: Vec<i8> = (0..n)
        .map(|k| {
            if geometry.free[k] {
                -1
            } else {
                jump_value(x0, nu, -1.0, 1.0, &geometry.position(k)) as i8
            }
        })
        .collect();
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (e, b) in geometry.bonds.iter().enumerate() {
        incident[b.from].push(e);
        incident[b.to].push(e);
    }
    let bond_cost = |spins: &[i8], e: usize| {
        let b = &geometry.bonds[e];
        if spins[b.from] != spins[b.to] {
            b.coefficient
        } else {
            0.0
        }
    };
    let mut energy: f64 = (0..geometry.bonds.len()).map(|e| bond_cost(&spins, e)).sum();
    let mut best = (energy, spins.clone());
    for step in 1u64..(1u64 << free.len()) {
        let node = free[step.trailing_zeros() as usize];
        let before: f64 = incident[node].iter().map(|&e| bond_cost(&spins, e)).sum();
        spins[node] = -spins[node];
        let after: f64 = incident[node].iter().map(|&e| bond_cost(&spins, e)).sum();
        energy += after - before;
        if energy < best.0 - 1e-12 {
            best = (energy, spins.clone());
        }
    }
    // Re-sum the winner exactly to drop accumulated rounding.
    let exact: f64 = (0..geometry.bonds.len()).map(|e| bond_cost(&best.1, e)).sum();
    let entries = geometry.sites.iter().cloned().zip(best.1).collect();
    Ok((exact, SpinConfiguration::from_sites(geometry.dim(), 1.0, entries)?))
}

/// One cell solve for `phi_T(nu)`.
pub fn surface_cell(
    field: &CoefficientField,
    nu: &[f64],
    size: usize,
) -> Result<CellProblemResult<SpinConfiguration>> {
    let start = Instant::now();
    let x0 = default_center(field.dim());
    let network = build_cut_network(field, size, nu, &x0)?;
    let ground = min_cut_ground_state(&network)?;
    let elapsed = start.elapsed();
    let norm = (size as f64).powi(field.dim() as i32 - 1);
    Ok(CellProblemResult {
        size,
        value: ground.energy / norm,
        energy: ground.energy,
        minimizer: ground.minimizer,
        diagnostics: Diagnostics {
            iterations: ground.flow.phases,
            residual: (ground.energy - ground.resummed).abs(),
            cut_edges: Some(ground.cut_edges),
            elapsed,
        },
    })
}

#[derive(Debug, Clone)]
pub struct SurfaceDensity {
    pub nu: Vec<f64>,
    pub samples: Vec<CellProblemResult<SpinConfiguration>>,
    /// Value at the largest cell.
    pub estimate: f64,
    /// Linear extrapolation in `1/T` through the two largest cells.
    pub extrapolated: Option<f64>,
}

fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.is_empty() {
        return Err(Error::InvalidParameter("at least one cell size is required".into()));
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("sizes must be strictly increasing".into()));
    }
    Ok(())
}

pub(crate) fn richardson(samples: &[(usize, f64)]) -> Option<f64> {
    let [.., (t1, v1), (t2, v2)] = samples else { return None };
    let (t1, t2) = (*t1 as f64, *t2 as f64);
    Some((t2 * v2 - t1 * v1) / (t2 - t1))
}

/// `phi_T(nu)` for each `T` in `sizes`; cells are solved concurrently.
pub fn surface_density(
    field: &CoefficientField,
    nu: &[f64],
    sizes: &[usize],
) -> Result<SurfaceDensity> {
    check_sizes(sizes)?;
    let samples: Vec<_> = par::map(sizes, |&t| surface_cell(field, nu, t))
        .into_iter()
        .collect::<Result<_>>()?;
    let pairs: Vec<(usize, f64)> = samples.iter().map(|s| (s.size, s.value)).collect();
    Ok(SurfaceDensity {
        nu: nu.to_vec(),
        estimate: samples.last().unwrap().value,
        extrapolated: richardson(&pairs),
        samples,
    })
}

/// Sweep directions: angles `2 pi j / n` in `d = 2`, Fibonacci-sphere points in `d = 3`.
pub fn sweep_directions(dim: usize, count: usize) -> Result<Vec<Vec<f64>>> {
    if count == 0 {
        return Err(Error::InvalidParameter("direction count must be positive".into()));
    }
    match dim {
        2 => Ok((0..count)
            .map(|j| {
                let a = std::f64::consts::TAU * j as f64 / count as f64;
                vec![a.cos(), a.sin()]
            })
            .collect()),
        3 => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|j| {
                    let z = 1.0 - 2.0 * (j as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let a = golden * j as f64;
                    normalize(&[r * a.cos(), r * a.sin(), z])
                })
                .collect()
        }
        _ => Err(Error::InvalidParameter(format!("direction sweeps need d = 2 or 3, got {dim}"))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WulffPoint {
    pub nu: Vec<f64>,
    pub phi: f64,
    /// `nu / phi(nu)`: the boundary point of `{ psi <= 1 }` in direction `nu`,
    /// where `psi(x) = |x| phi(x / |x|)`.
    pub boundary: Vec<f64>,
}

/// Samples `phi_T` on evenly spread directions.
pub fn wulff_sample(field: &CoefficientField, n_dirs: usize, size: usize) -> Result<Vec<WulffPoint>> {
    let dirs = sweep_directions(field.dim(), n_dirs)?;
    par::map(&dirs, |nu| -> Result<WulffPoint> {
        let phi = surface_cell(field, nu, size)?.value;
        Ok(WulffPoint { nu: nu.clone(), phi, boundary: nu.iter().map(|x| x / phi).collect() })
    })
    .into_iter()
    .collect()
}

/// Planar convex hull (counter-clockwise, collinear points dropped).
pub fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Distance from the origin to the hull boundary along the unit direction `dir`
/// (the hull must contain the origin in its interior).
fn hull_radius(hull: &[[f64; 2]], dir: [f64; 2]) -> f64 {
    let mut best = f64::INFINITY;
    for k in 0..hull.len() {
        let a = hull[k];
        let b = hull[(k + 1) % hull.len()];
        // Solve t dir = a + s (b - a).
        let e = [b[0] - a[0], b[1] - a[1]];
        let det = dir[0] * (-e[1]) - dir[1] * (-e[0]);
        if det.abs() < 1e-300 {
            continue;
        }
        let t = (a[0] * (-e[1]) - a[1] * (-e[0])) / det;
        let s = (dir[0] * a[1] - dir[1] * a[0]) / det;
        if t > 0.0 && (-1e-12..=1.0 + 1e-12).contains(&s) {
            best = best.min(t);
        }
    }
    best
}

/// Largest relative amount by which the convex hull of the sampled boundary
/// points sticks out beyond the sampled radial profile; zero for a convex
/// sample. Only meaningful in `d = 2`.
pub fn convexity_defect(points: &[WulffPoint]) -> Result<f64> {
    if points.iter().any(|p| p.boundary.len() != 2) {
        return Err(Error::InvalidParameter("convexity check needs planar samples".into()));
    }
    let pts: Vec<[f64; 2]> = points.iter().map(|p| [p.boundary[0], p.boundary[1]]).collect();
    let hull = convex_hull(&pts);
    if hull.len() < 3 {
        return Err(Error::InvalidParameter("need at least three non-collinear samples".into()));
    }
    let mut defect: f64 = 0.0;
    for p in points {
        let radius = 1.0 / p.phi;
        let r = hull_radius(&hull, [p.nu[0], p.nu[1]]);
        defect = defect.max(r / radius - 1.0);
    }
    Ok(defect)
}
