//! Dinic's maximum-flow algorithm on real capacities.
//!
//! Arcs are stored in twin pairs (`e`, `e ^ 1`); adding an undirected bond
//! gives both twins the same capacity. Adjacency lists keep insertion order,
//! so runs are deterministic.

use std::collections::VecDeque;

#[derive(Debug, Clone)]
pub struct FlowGraph {
    adj: Vec<Vec<usize>>,
    head: Vec<usize>,
    cap: Vec<f64>,
    initial: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowStats {
    pub value: f64,
    /// BFS phases (level graphs built).
    pub phases: usize,
    pub augmenting_paths: usize,
}

impl FlowGraph {
    pub fn new(nodes: usize) -> Self {
        Self { adj: vec![Vec::new(); nodes], head: Vec::new(), cap: Vec::new(), initial: Vec::new() }
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn arc_count(&self) -> usize {
        self.head.len()
    }

    fn push_pair(&mut self, u: usize, v: usize, forward: f64, backward: f64) -> usize {
        assert!(forward >= 0.0 && backward >= 0.0, "capacities must be nonnegative");
        let id = self.head.len();
        self.head.push(v);
        self.cap.push(forward);
        self.adj[u].push(id);
        self.head.push(u);
        self.cap.push(backward);
        self.adj[v].push(id + 1);
        self.initial.push(forward);
        self.initial.push(backward);
        id
    }

    /// Directed arc `u -> v`.
    pub fn add_arc(&mut self, u: usize, v: usize, capacity: f64) -> usize {
        self.push_pair(u, v, capacity, 0.0)
    }

    /// Arc pair `u <-> v` with the same capacity both ways.
    pub fn add_bond(&mut self, u: usize, v: usize, capacity: f64) -> usize {
        self.push_pair(u, v, capacity, capacity)
    }

    /// Arcs as `(tail, head, capacity)`, excluding zero-capacity twins.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.head.len())
            .filter(|&e| self.initial[e] > 0.0)
            .map(|e| (self.head[e ^ 1], self.head[e], self.initial[e]))
    }

    fn tolerance(&self) -> f64 {
        let max = self.initial.iter().copied().fold(0.0, f64::max);
        1e-13 * max.max(1.0)
    }

    fn levels(&self, s: usize, tol: f64) -> Vec<usize> {
        let mut level = vec![usize::MAX; self.adj.len()];
        level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.adj[u] {
                let v = self.head[e];
                if self.cap[e] > tol && level[v] == usize::MAX {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        level
    }

    /// Runs Dinic from `s` to `t`; residual capacities are kept for
    /// [`source_side`](Self::source_side).
    pub fn max_flow(&mut self, s: usize, t: usize) -> FlowStats {
        assert!(s != t, "source and sink must differ");
        let tol = self.tolerance();
        let mut stats = FlowStats { value: 0.0, phases: 0, augmenting_paths: 0 };
        loop {
            let level = self.levels(s, tol);
            if level[t] == usize::MAX {
                break;
            }
            stats.phases += 1;
            let mut next = vec![0usize; self.adj.len()];
            let mut path: Vec<usize> = Vec::new();
            let mut u = s;
            loop {
                if u == t {
                    let bottleneck = path.iter().map(|&e| self.cap[e]).fold(f64::INFINITY, f64::min);
                    for &e in &path {
                        self.cap[e] -= bottleneck;
                        self.cap[e ^ 1] += bottleneck;
                    }
                    stats.value += bottleneck;
                    stats.augmenting_paths += 1;
                    // Retreat to the tail of the first saturated arc.
                    let cut = path.iter().position(|&e| self.cap[e] <= tol).unwrap_or(0);
                    path.truncate(cut);
                    u = path.last().map_or(s, |&e| self.head[e]);
                    continue;
                }
                let mut advanced = false;
                while next[u] < self.adj[u].len() {
                    let e = self.adj[u][next[u]];
                    let v = self.head[e];
                    if self.cap[e] > tol && level[v] == level[u] + 1 {
                        path.push(e);
                        u = v;
                        advanced = true;
                        break;
                    }
                    next[u] += 1;
                }
                if advanced {
                    continue;
                }
                // Dead end: retreat.
                match path.pop() {
                    Some(e) => {
                        u = self.head[e ^ 1];
                        next[u] += 1;
                    }
                    None => break,
                }
            }
        }
        stats
    }

    /// Nodes reachable from `s` in the residual graph (the source side of a
    /// minimum cut once `max_flow` has run).
    pub fn source_side(&self, s: usize) -> Vec<bool> {
        let tol = self.tolerance();
        let mut seen = vec![false; self.adj.len()];
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &e in &self.adj[u] {
                let v = self.head[e];
                if self.cap[e] > tol && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }

    /// Capacity of the cut `(side, !side)` in the original network.
    pub fn cut_capacity(&self, side: &[bool]) -> f64 {
        self.arcs()
            .filter(|&(u, v, _)| side[u] && !side[v])
            .map(|(_, _, c)| c)
            .sum()
    }
}
