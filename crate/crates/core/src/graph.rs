//! Undirected connected communication graphs.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Rejection cap for [`Graph::random_connected`].
pub const MAX_GENERATION_ATTEMPTS: usize = 10_000;

/// Simple undirected graph on nodes `0..n`. Always connected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<bool>,
}

impl Graph {
    /// Builds a graph from unordered pairs. Duplicates collapse; self-loops,
    /// out-of-range nodes and disconnected inputs are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let g = Self::build(n, edges)?;
        if !g.is_connected() {
            return Err(Error::Graph(format!("graph on {n} nodes is not connected")));
        }
        Ok(g)
    }

    fn build(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n < 2 {
            return Err(Error::Graph(format!("need at least 2 nodes, got {n}")));
        }
        let mut adjacency = vec![false; n * n];
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::Graph(format!("edge ({i}, {j}) out of range for {n} nodes")));
            }
            if i == j {
                return Err(Error::Graph(format!("self-loop at node {i}")));
            }
            adjacency[i * n + j] = true;
            adjacency[j * n + i] = true;
        }
        let mut list = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if adjacency[i * n + j] {
                    list.push((i, j));
                }
            }
        }
        Ok(Self {
            n,
            edges: list,
            adjacency,
        })
    }

    /// Erdős–Rényi G(n, p), resampled until connected.
    pub fn random_connected(n: usize, edge_prob: f64, seed: u64) -> Result<Self> {
        if !(edge_prob > 0.0 && edge_prob <= 1.0) {
            return Err(Error::Graph(format!("edge probability {edge_prob} not in (0, 1]")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..MAX_GENERATION_ATTEMPTS {
            let mut edges = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    if rng.random::<f64>() < edge_prob {
                        edges.push((i, j));
                    }
                }
            }
            let g = Self::build(n, &edges)?;
            if g.is_connected() {
                return Ok(g);
            }
        }
        Err(Error::Graph(format!(
            "no connected G({n}, {edge_prob}) sample in {MAX_GENERATION_ATTEMPTS} attempts"
        )))
    }

    /// Path graph `0 - 1 - … - (n-1)`.
    pub fn line(n: usize) -> Result<Self> {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::from_edges(n, &edges)
    }

    pub fn complete(n: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                edges.push((i, j));
            }
        }
        Self::from_edges(n, &edges)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Edges `(i, j)` with `i < j`, lexicographically sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i * self.n + j]
    }

    pub fn degree(&self, i: usize) -> usize {
        (0..self.n).filter(|&j| self.has_edge(i, j)).count()
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n).map(|i| self.degree(i)).collect()
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&j| self.has_edge(i, j))
    }

    fn bfs(&self, src: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.n];
        dist[src] = Some(0);
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap_or(0);
            for v in self.neighbors(u) {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    pub fn is_connected(&self) -> bool {
        self.bfs(0).iter().all(Option::is_some)
    }

    /// Longest shortest-path length.
    pub fn diameter(&self) -> usize {
        (0..self.n)
            .flat_map(|s| self.bfs(s))
            .map(|d| d.unwrap_or(usize::MAX))
            .max()
            .unwrap_or(0)
    }
}
