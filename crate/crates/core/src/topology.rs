//! Directed communication graphs and their mixing matrices.
//!
//! An edge `(i, j)` means agent `i` receives from agent `j`. The pull matrix
//! `R` is row stochastic and supported on the pull graph; the push matrix `C`
//! is column stochastic and supported on the push graph. Their Perron vectors
//! `r` (left, of `R`) and `c` (right, of `C`) are normalized to sum to `n`.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::seq::index;

use crate::error::{Error, Result};
use crate::rng;

pub const STOCHASTIC_TOL: f64 = 1e-12;
pub const PERRON_RESIDUAL_TOL: f64 = 1e-10;
/// `rᵀc` at or below this counts as zero; power iteration leaves entries of
/// order 1e-13 on non-root nodes.
pub const ROOT_OVERLAP_TOL: f64 = 1e-8;
const POWER_STEP_TOL: f64 = 1e-13;
const POWER_MAX_ITERS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedGraph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl DirectedGraph {
    /// Graph on `n` nodes with only the self-loops.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("graph needs at least one node"));
        }
        Ok(Self {
            n,
            edges: (0..n).map(|i| (i, i)).collect(),
        })
    }

    /// Graph with the given edges plus every self-loop.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut g = Self::new(n)?;
        for (i, j) in edges {
            g.add_edge(i, j)?;
        }
        Ok(g)
    }

    /// Adds "`i` receives from `j`". Returns whether the edge was new.
    pub fn add_edge(&mut self, i: usize, j: usize) -> Result<bool> {
        if i >= self.n || j >= self.n {
            return Err(Error::param(format!("edge ({i}, {j}) out of range for n = {}", self.n)));
        }
        Ok(self.edges.insert((i, j)))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges between distinct nodes, i.e. the ones that carry a transmission.
    pub fn link_count(&self) -> usize {
        self.edges.iter().filter(|(i, j)| i != j).count()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i, j))
    }

    /// Nodes `i` receives from, self included.
    pub fn in_neighbors(&self, i: usize) -> Vec<usize> {
        self.edges.range((i, 0)..(i + 1, 0)).map(|&(_, j)| j).collect()
    }

    /// Nodes that receive from `j`, self included.
    pub fn out_neighbors(&self, j: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter(|&&(_, src)| src == j)
            .map(|&(dst, _)| dst)
            .collect()
    }

    /// Edge list, one `i j` pair per line.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for (i, j) in self.edges() {
            let _ = writeln!(out, "{i} {j}");
        }
        out
    }

    pub fn from_edge_list(n: usize, text: &str) -> Result<Self> {
        let mut g = Self::new(n)?;
        for (row, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace().map(str::parse::<usize>);
            match (parts.next(), parts.next(), parts.next()) {
                (Some(Ok(i)), Some(Ok(j)), None) => {
                    g.add_edge(i, j).map_err(|e| Error::Parse {
                        row,
                        detail: e.to_string(),
                    })?;
                }
                _ => {
                    return Err(Error::Parse {
                        row,
                        detail: format!("expected `i j`, got `{line}`"),
                    })
                }
            }
        }
        Ok(g)
    }
}

/// Undirected cycle (both directions) plus `d` extra directed links drawn
/// uniformly without replacement from the ordered pairs not yet present.
pub fn build_ring_plus_random(n: usize, d: usize, seed: u64) -> Result<DirectedGraph> {
    if n < 3 {
        return Err(Error::param(format!("ring needs n >= 3, got {n}")));
    }
    let capacity = n * (n - 1) - 2 * n;
    if d > capacity {
        return Err(Error::param(format!(
            "d = {d} extra links requested but only {capacity} pairs remain for n = {n}"
        )));
    }
    let mut g = DirectedGraph::new(n)?;
    for i in 0..n {
        let next = (i + 1) % n;
        g.add_edge(i, next)?;
        g.add_edge(next, i)?;
    }
    let candidates: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| !g.contains(i, j))
        .collect();
    debug_assert_eq!(candidates.len(), capacity);
    let mut rng = rng::stream(seed, rng::TOPOLOGY);
    let mut picked: Vec<usize> = index::sample(&mut rng, candidates.len(), d).into_vec();
    picked.sort_unstable();
    for k in picked {
        let (i, j) = candidates[k];
        g.add_edge(i, j)?;
    }
    Ok(g)
}

fn reaches_all(n: usize, adjacency: &[Vec<usize>]) -> bool {
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    let mut count = 1;
    while let Some(v) = queue.pop_front() {
        for &w in &adjacency[v] {
            if !seen[w] {
                seen[w] = true;
                count += 1;
                queue.push_back(w);
            }
        }
    }
    count == n
}

/// True iff information can flow from every node to every other node.
pub fn is_strongly_connected(g: &DirectedGraph) -> bool {
    let n = g.n();
    let mut forward = vec![Vec::new(); n];
    let mut backward = vec![Vec::new(); n];
    for (i, j) in g.edges() {
        // information flows j -> i
        forward[j].push(i);
        backward[i].push(j);
    }
    reaches_all(n, &forward) && reaches_all(n, &backward)
}

/// Uniform row weights: `R[i][j] = 1 / |in-neighbors of i|` on the support.
pub fn row_stochastic_weights(g: &DirectedGraph) -> DMatrix<f64> {
    let n = g.n();
    let mut r = DMatrix::zeros(n, n);
    for i in 0..n {
        let inn = g.in_neighbors(i);
        let w = 1.0 / inn.len() as f64;
        for j in inn {
            r[(i, j)] = w;
        }
    }
    r
}

/// Uniform column weights: `C[i][j] = 1 / |out-neighbors of j|` on the support.
pub fn column_stochastic_weights(g: &DirectedGraph) -> DMatrix<f64> {
    let n = g.n();
    let mut c = DMatrix::zeros(n, n);
    for j in 0..n {
        let out = g.out_neighbors(j);
        let w = 1.0 / out.len() as f64;
        for i in out {
            c[(i, j)] = w;
        }
    }
    c
}

fn power_iterate(op: impl Fn(&DVector<f64>) -> DVector<f64>, n: usize, what: &str) -> Result<DVector<f64>> {
    let scale = |v: DVector<f64>| {
        let s = v.sum();
        v * (n as f64 / s)
    };
    let mut v = DVector::from_element(n, 1.0);
    for _ in 0..POWER_MAX_ITERS {
        let next = scale(op(&v));
        let change = (&next - &v).amax();
        v = next;
        if change <= POWER_STEP_TOL {
            // Clamp round-off negatives on reducible supports.
            v.iter_mut().for_each(|x| *x = x.max(0.0));
            return Ok(scale(v));
        }
    }
    Err(Error::Numerical(format!(
        "power iteration for {what} did not converge in {POWER_MAX_ITERS} steps"
    )))
}

/// Left Perron vector of `R` and right Perron vector of `C`, both summing to `n`.
pub fn perron_vectors(r: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
    let n = r.nrows();
    if !r.is_square() || c.shape() != r.shape() {
        return Err(Error::param("R and C must be square and of equal size"));
    }
    let rt = r.transpose();
    let left = power_iterate(|v| &rt * v, n, "r")?;
    let right = power_iterate(|v| c * v, n, "c")?;
    Ok((left, right))
}

/// The pair of mixing matrices for one experiment, with their graphs and
/// Perron vectors.
#[derive(Debug, Clone)]
pub struct MixingMatrices {
    pub r: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub r_perron: DVector<f64>,
    pub c_perron: DVector<f64>,
    pub graph_r: DirectedGraph,
    pub graph_c: DirectedGraph,
}

impl MixingMatrices {
    /// Assemble without validation; see [`check_assumption2`].
    pub fn from_parts(
        r: DMatrix<f64>,
        c: DMatrix<f64>,
        graph_r: DirectedGraph,
        graph_c: DirectedGraph,
    ) -> Result<Self> {
        let (r_perron, c_perron) = perron_vectors(&r, &c)?;
        Ok(Self {
            r,
            c,
            r_perron,
            c_perron,
            graph_r,
            graph_c,
        })
    }

    pub fn n(&self) -> usize {
        self.r.nrows()
    }

    /// Agents whose pull row has a nonzero weight on `j`, self included.
    pub fn r_out_neighbors(&self, j: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.r[(i, j)] > 0.0).collect()
    }

    /// Agents whose push column `j` reaches, self included.
    pub fn c_out_neighbors(&self, j: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.c[(i, j)] > 0.0).collect()
    }

    /// Number of nonzero entries in row `i` of `R`.
    pub fn r_in_degree(&self, i: usize) -> usize {
        self.r.row(i).iter().filter(|&&w| w > 0.0).count()
    }
}

pub fn build_mixing_matrices(graph_r: &DirectedGraph, graph_c: &DirectedGraph) -> Result<MixingMatrices> {
    if graph_r.n() != graph_c.n() {
        return Err(Error::param(format!(
            "pull graph has {} nodes, push graph has {}",
            graph_r.n(),
            graph_c.n()
        )));
    }
    for (name, g) in [("pull", graph_r), ("push", graph_c)] {
        if !is_strongly_connected(g) {
            return Err(Error::Assumption(format!("{name} graph is not strongly connected")));
        }
    }
    MixingMatrices::from_parts(
        row_stochastic_weights(graph_r),
        column_stochastic_weights(graph_c),
        graph_r.clone(),
        graph_c.clone(),
    )
}

/// Outcome of [`check_assumption2`]; empty `violations` means it holds.
#[derive(Debug, Clone, Default)]
pub struct Assumption2Check {
    pub violations: Vec<String>,
}

impl Assumption2Check {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks stochasticity, support, and `rᵀc > 0`.
pub fn check_assumption2(m: &MixingMatrices) -> Assumption2Check {
    let n = m.n();
    let mut violations = Vec::new();
    for i in 0..n {
        let s = m.r.row(i).sum();
        if (s - 1.0).abs() > STOCHASTIC_TOL {
            violations.push(format!("row {i} of R sums to {s}"));
        }
        let s = m.c.column(i).sum();
        if (s - 1.0).abs() > STOCHASTIC_TOL {
            violations.push(format!("column {i} of C sums to {s}"));
        }
    }
    for i in 0..n {
        for j in 0..n {
            if m.r[(i, j)] < 0.0 || m.c[(i, j)] < 0.0 {
                violations.push(format!("negative weight at ({i}, {j})"));
            }
            if m.r[(i, j)] != 0.0 && !m.graph_r.contains(i, j) {
                violations.push(format!("R({i}, {j}) outside the pull graph"));
            }
            if m.c[(i, j)] != 0.0 && !m.graph_c.contains(i, j) {
                violations.push(format!("C({i}, {j}) outside the push graph"));
            }
        }
    }
    let rc = m.r_perron.dot(&m.c_perron);
    if rc <= ROOT_OVERLAP_TOL {
        violations.push(format!("r^T c = {rc} is not positive"));
    }
    Assumption2Check { violations }
}
