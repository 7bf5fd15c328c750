//! Undirected, unweighted sensor-network graphs.
//!
//! The Laplacian is kept dense (it is the test oracle and the input to the
//! eigen-solver); neighbor exchanges walk the adjacency lists.

use std::collections::{BTreeSet, VecDeque};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Placements tried before a random geometric graph is given up on.
pub const RGG_MAX_ATTEMPTS: usize = 200;

/// Default absolute tolerance for Laplacian eigenvalues.
pub const DEFAULT_SPECTRAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum Topology {
    Ring,
    Complete,
    Path,
    /// Nodes placed uniformly on the unit square, linked when their distance
    /// is at most `radius`. Placements are re-drawn until connected.
    RandomGeometric {
        radius: f64,
        seed: u64,
    },
    Explicit(Vec<(usize, usize)>),
}

#[derive(Debug, Clone)]
pub struct SensorGraph {
    n_nodes: usize,
    neighbors: Vec<Vec<usize>>,
    adjacency: DMatrix<f64>,
    laplacian: DMatrix<f64>,
}

impl SensorGraph {
    /// Builds a graph from an edge list without requiring connectivity.
    ///
    /// Duplicate edges (in either orientation) collapse to one.
    pub fn from_edges(n_nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n_nodes == 0 {
            return Err(Error::InvalidArgument("graph needs at least one node".into()));
        }
        let mut sets = vec![BTreeSet::new(); n_nodes];
        for &(i, j) in edges {
            if i >= n_nodes || j >= n_nodes || i == j {
                return Err(Error::InvalidEdge(i, j));
            }
            sets[i].insert(j);
            sets[j].insert(i);
        }
        let neighbors: Vec<Vec<usize>> = sets.into_iter().map(|s| s.into_iter().collect()).collect();

        let mut adjacency = DMatrix::zeros(n_nodes, n_nodes);
        for (i, nbrs) in neighbors.iter().enumerate() {
            for &j in nbrs {
                adjacency[(i, j)] = 1.0;
            }
        }
        let mut laplacian = -adjacency.clone();
        for (i, nbrs) in neighbors.iter().enumerate() {
            laplacian[(i, i)] = nbrs.len() as f64;
        }

        Ok(Self { n_nodes, neighbors, adjacency, laplacian })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.neighbors.iter().map(Vec::len).collect()
    }

    pub fn max_degree(&self) -> usize {
        self.neighbors.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn adjacency(&self) -> &DMatrix<f64> {
        &self.adjacency
    }

    pub fn laplacian(&self) -> &DMatrix<f64> {
        &self.laplacian
    }

    /// Edges as `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.neighbors
            .iter()
            .enumerate()
            .flat_map(|(i, nbrs)| nbrs.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
            .collect()
    }

    /// Edge-list text in the same format [`parse_edge_list`] reads.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("# nodes {}\n", self.n_nodes);
        for (i, j) in self.edges() {
            out.push_str(&format!("{i} {j}\n"));
        }
        out
    }
}

pub fn build_graph(topology: &Topology, n_nodes: usize) -> Result<SensorGraph> {
    if n_nodes < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 nodes, got {n_nodes}")));
    }
    let g = match topology {
        Topology::Ring => {
            let edges: Vec<_> = (0..n_nodes).map(|i| (i, (i + 1) % n_nodes)).collect();
            SensorGraph::from_edges(n_nodes, &edges)?
        }
        Topology::Path => {
            let edges: Vec<_> = (0..n_nodes - 1).map(|i| (i, i + 1)).collect();
            SensorGraph::from_edges(n_nodes, &edges)?
        }
        Topology::Complete => {
            let edges: Vec<_> = (0..n_nodes).flat_map(|i| (i + 1..n_nodes).map(move |j| (i, j))).collect();
            SensorGraph::from_edges(n_nodes, &edges)?
        }
        Topology::RandomGeometric { radius, seed } => random_geometric(n_nodes, *radius, *seed)?,
        Topology::Explicit(edges) => {
            let g = SensorGraph::from_edges(n_nodes, edges)?;
            if !is_connected(&g) {
                return Err(Error::GraphNotConnected);
            }
            g
        }
    };
    Ok(g)
}

fn random_geometric(n_nodes: usize, radius: f64, seed: u64) -> Result<SensorGraph> {
    if radius.is_nan() || radius <= 0.0 {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r2 = radius * radius;
    for _ in 0..RGG_MAX_ATTEMPTS {
        let pts: Vec<(f64, f64)> = (0..n_nodes).map(|_| (rng.random::<f64>(), rng.random::<f64>())).collect();
        let mut edges = Vec::new();
        for i in 0..n_nodes {
            for j in i + 1..n_nodes {
                let (dx, dy) = (pts[i].0 - pts[j].0, pts[i].1 - pts[j].1);
                if dx * dx + dy * dy <= r2 {
                    edges.push((i, j));
                }
            }
        }
        let g = SensorGraph::from_edges(n_nodes, &edges)?;
        if is_connected(&g) {
            return Ok(g);
        }
    }
    Err(Error::GraphGenerationFailed { attempts: RGG_MAX_ATTEMPTS })
}

/// Breadth-first reachability from node 0.
pub fn is_connected(g: &SensorGraph) -> bool {
    let mut seen = vec![false; g.n_nodes];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    let mut count = 1;
    while let Some(i) = queue.pop_front() {
        for &j in &g.neighbors[i] {
            if !seen[j] {
                seen[j] = true;
                count += 1;
                queue.push_back(j);
            }
        }
    }
    count == g.n_nodes
}

#[derive(Debug, Clone)]
pub struct SpectralSummary {
    /// Laplacian eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// Unit eigenvectors, column `k` paired with `eigenvalues[k]`.
    pub eigenvectors: DMatrix<f64>,
    pub lambda_2: f64,
    pub lambda_max: f64,
}

impl SpectralSummary {
    /// Eigenvalues of the non-consensus modes, `lambda_2 ..= lambda_max`.
    pub fn nonzero_modes(&self) -> &[f64] {
        &self.eigenvalues[1..]
    }
}

/// Full symmetric eigen-decomposition of the Laplacian.
///
/// Eigenvalues within `tol` of zero are snapped to exactly zero, so a
/// disconnected graph reports `lambda_2 == 0.0`.
pub fn spectral_summary(g: &SensorGraph, tol: f64) -> Result<SpectralSummary> {
    let eps = (tol * 1e-3).max(f64::EPSILON);
    let eig = nalgebra::SymmetricEigen::try_new(g.laplacian.clone(), eps, 10_000).ok_or(Error::SpectralFailure)?;

    let mut order: Vec<usize> = (0..g.n_nodes).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let eigenvalues: Vec<f64> = order
        .iter()
        .map(|&k| {
            let v = eig.eigenvalues[k];
            if v.abs() <= tol {
                0.0
            } else {
                v
            }
        })
        .collect();
    let eigenvectors = DMatrix::from_fn(g.n_nodes, g.n_nodes, |r, c| eig.eigenvectors[(r, order[c])]);

    let lambda_2 = eigenvalues.get(1).copied().unwrap_or(0.0);
    let lambda_max = *eigenvalues.last().unwrap();
    Ok(SpectralSummary { eigenvalues, eigenvectors, lambda_2, lambda_max })
}

/// `sum_{j in N_i} (values_i - values_j)`: node `i`'s row of `(L ⊗ I) v`.
pub fn neighbor_disagreement(values: &[DVector<f64>], g: &SensorGraph, i: usize) -> Result<DVector<f64>> {
    if values.len() != g.n_nodes {
        return Err(Error::Dimension(format!("{} values for {} nodes", values.len(), g.n_nodes)));
    }
    let dim = values[i].len();
    let mut acc = DVector::zeros(dim);
    for &j in &g.neighbors[i] {
        if values[j].len() != dim {
            return Err(Error::Dimension(format!(
                "node {j} carries {} entries, node {i} carries {dim}",
                values[j].len()
            )));
        }
        acc += &values[i] - &values[j];
    }
    Ok(acc)
}

/// Parses `i j` edge pairs, one per line. `#` starts a comment.
pub fn parse_edge_list(text: &str) -> Result<Vec<(usize, usize)>> {
    let mut edges = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::Parse { line: lineno + 1, msg: format!("expected 2 fields, got {}", fields.len()) });
        }
        let parse =
            |s: &str| s.parse::<usize>().map_err(|e| Error::Parse { line: lineno + 1, msg: format!("{s:?}: {e}") });
        edges.push((parse(fields[0])?, parse(fields[1])?));
    }
    Ok(edges)
}

pub fn load_edge_list(path: impl AsRef<Path>) -> Result<Vec<(usize, usize)>> {
    parse_edge_list(&std::fs::read_to_string(path)?)
}
