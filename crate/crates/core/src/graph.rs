//! Undirected interaction graphs and their algebraic matrices.
//!
//! Node indices are 1-based at the public boundary (`build_graph`, edge
//! listings, error messages) and 0-based internally.

use std::collections::{BTreeSet, VecDeque};

use rand::Rng;
use thiserror::Error;

use crate::linalg::SquareMatrix;

/// Absolute tolerance for treating a Laplacian eigenvalue as zero.
pub const ZERO_EIGENVALUE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("graph must have at least one node")]
    Empty,
    #[error("edge ({0}, {1}) references a node outside 1..={2}")]
    IndexOutOfRange(usize, usize, usize),
    #[error("self-loop at node {0}")]
    SelfLoop(usize),
}

/// Undirected simple graph on `n` nodes.
///
/// Immutable once built. Connectivity is computed at construction since every
/// multiplex controller checks it on each evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    // 0-based, each pair stored with i < j, sorted
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
    connected: bool,
}

/// Result of [`build_graph`]: the graph plus any duplicate edges that were dropped.
#[derive(Debug, Clone)]
pub struct GraphBuild {
    pub graph: Graph,
    /// Duplicate pairs (1-based, as written by the caller) removed during construction.
    pub duplicates: Vec<(usize, usize)>,
}

/// Validates a 1-based edge list and builds the graph.
///
/// `(i, j)` and `(j, i)` denote the same edge; repeats are dropped and
/// reported in [`GraphBuild::duplicates`].
pub fn build_graph(n: usize, edge_list: &[(usize, usize)]) -> Result<GraphBuild, GraphError> {
    if n == 0 {
        return Err(GraphError::Empty);
    }
    let mut set = BTreeSet::new();
    let mut duplicates = Vec::new();
    for &(i, j) in edge_list {
        if i == 0 || j == 0 || i > n || j > n {
            return Err(GraphError::IndexOutOfRange(i, j, n));
        }
        if i == j {
            return Err(GraphError::SelfLoop(i));
        }
        let key = (i.min(j) - 1, i.max(j) - 1);
        if !set.insert(key) {
            duplicates.push((i, j));
        }
    }
    if !duplicates.is_empty() {
        log::warn!(
            "dropped {} duplicate edge(s): {:?}",
            duplicates.len(),
            duplicates
        );
    }
    let graph = Graph::from_internal(n, set.into_iter().collect());
    Ok(GraphBuild { graph, duplicates })
}

impl Graph {
    /// Convenience wrapper over [`build_graph`] that discards duplicate reports.
    pub fn new(n: usize, edge_list: &[(usize, usize)]) -> Result<Graph, GraphError> {
        build_graph(n, edge_list).map(|b| b.graph)
    }

    fn from_internal(n: usize, edges: Vec<(usize, usize)>) -> Graph {
        let mut neighbors = vec![Vec::new(); n];
        for &(i, j) in &edges {
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        let connected = bfs_reaches_all(&neighbors);
        Graph {
            n,
            edges,
            neighbors,
            connected,
        }
    }

    pub fn path(n: usize) -> Graph {
        Graph::from_internal(n.max(1), (1..n).map(|i| (i - 1, i)).collect())
    }

    pub fn cycle(n: usize) -> Graph {
        let mut edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        if n > 2 {
            edges.push((0, n - 1));
        }
        edges.sort_unstable();
        Graph::from_internal(n.max(1), edges)
    }

    pub fn complete(n: usize) -> Graph {
        let edges = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .collect();
        Graph::from_internal(n.max(1), edges)
    }

    pub fn edgeless(n: usize) -> Graph {
        Graph::from_internal(n.max(1), Vec::new())
    }

    /// Erdős–Rényi G(n, p) sample.
    pub fn random<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Graph {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random::<f64>() < p {
                    edges.push((i, j));
                }
            }
        }
        Graph::from_internal(n.max(1), edges)
    }

    /// Connected random graph: a uniformly random recursive tree plus G(n, p) extras.
    pub fn random_connected<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Graph {
        let mut set = BTreeSet::new();
        for v in 1..n {
            let u = rng.random_range(0..v);
            set.insert((u, v));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random::<f64>() < p {
                    set.insert((i, j));
                }
            }
        }
        Graph::from_internal(n.max(1), set.into_iter().collect())
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as 1-based pairs with `i < j`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.edges.iter().map(|&(i, j)| (i + 1, j + 1)).collect()
    }

    /// 0-based neighbor indices of 0-based node `i`.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.neighbors.iter().map(Vec::len).collect()
    }

    pub fn is_connected(&self) -> bool {
        self.connected
    }

    pub fn degree_matrix(&self) -> SquareMatrix {
        let d: Vec<f64> = self.degrees().into_iter().map(|d| d as f64).collect();
        SquareMatrix::from_diagonal(&d)
    }

    pub fn adjacency_matrix(&self) -> SquareMatrix {
        let mut a = SquareMatrix::zeros(self.n);
        for &(i, j) in &self.edges {
            a[(i, j)] = 1.0;
            a[(j, i)] = 1.0;
        }
        a
    }

    /// L = D − A.
    pub fn laplacian(&self) -> SquareMatrix {
        &self.degree_matrix() - &self.adjacency_matrix()
    }

    /// Laplacian eigenvalues, ascending.
    pub fn laplacian_spectrum(&self) -> Vec<f64> {
        self.laplacian().symmetric_eigenvalues()
    }

    /// λ₂(L), the algebraic connectivity. Zero for a single node.
    pub fn algebraic_connectivity(&self) -> f64 {
        self.laplacian_spectrum().get(1).copied().unwrap_or(0.0)
    }

    /// Eigenvalues of the pinned Laplacian L + diag(k), ascending.
    pub fn pinned_spectrum(&self, leaders: &[bool]) -> Vec<f64> {
        assert_eq!(leaders.len(), self.n);
        let mut m = self.laplacian();
        for (i, &k) in leaders.iter().enumerate() {
            if k {
                m[(i, i)] += 1.0;
            }
        }
        m.symmetric_eigenvalues()
    }
}

fn bfs_reaches_all(neighbors: &[Vec<usize>]) -> bool {
    let n = neighbors.len();
    if n <= 1 {
        return true;
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = queue.pop_front() {
        for &v in &neighbors[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                queue.push_back(v);
            }
        }
    }
    count == n
}
