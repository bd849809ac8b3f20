//! Undirected simple graphs and the generators used by the benchmarks.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("graph needs at least {min} vertices, got {got}")]
    InvalidSize { min: usize, got: usize },
    #[error("edge ({i}, {j}) is invalid for a simple graph on {n} vertices")]
    InvalidEdge { i: usize, j: usize, n: usize },
}

/// An undirected simple graph on vertices `0..n`. Edges are stored as
/// ordered pairs `(i, j)` with `i < j`; `{i, j}` and `{j, i}` are the same
/// edge. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl Graph {
    /// Builds a graph from an edge list, normalizing pair order and
    /// rejecting self-loops and out-of-range endpoints. Duplicates collapse.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, GraphError> {
        if n < 1 {
            return Err(GraphError::InvalidSize { min: 1, got: n });
        }
        let mut set = BTreeSet::new();
        for (i, j) in edges {
            if i == j || i >= n || j >= n {
                return Err(GraphError::InvalidEdge { i, j, n });
            }
            set.insert((i.min(j), i.max(j)));
        }
        Ok(Self { n, edges: set })
    }

    /// Complete graph on `n >= 2` vertices.
    pub fn complete(n: usize) -> Result<Self, GraphError> {
        if n < 2 {
            return Err(GraphError::InvalidSize { min: 2, got: n });
        }
        let edges = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j)));
        Self::new(n, edges)
    }

    /// Star on `n >= 2` vertices with vertex 0 as the hub.
    pub fn star(n: usize) -> Result<Self, GraphError> {
        if n < 2 {
            return Err(GraphError::InvalidSize { min: 2, got: n });
        }
        Self::new(n, (1..n).map(|j| (0, j)))
    }

    /// Complete bipartite graph with parts `{0..p}` and `{p..p+q}`.
    pub fn complete_bipartite(p: usize, q: usize) -> Result<Self, GraphError> {
        if p < 1 || q < 1 {
            return Err(GraphError::InvalidSize { min: 1, got: p.min(q) });
        }
        let edges = (0..p).flat_map(|i| (0..q).map(move |j| (i, p + j)));
        Self::new(p + q, edges)
    }

    /// Seeded random graph: for every unordered pair a uniform draw
    /// `u ~ Uniform[0, 1)` is taken in lexicographic pair order and the edge
    /// is included iff `u > threshold`. Note that `threshold` is *not* the
    /// edge probability; the edge probability is `1 - threshold`.
    ///
    /// The result may be disconnected; callers must check.
    pub fn random(n: usize, threshold: f64, seed: u64) -> Result<Self, GraphError> {
        if n < 1 {
            return Err(GraphError::InvalidSize { min: 1, got: n });
        }
        assert!(
            (0.0..=1.0).contains(&threshold),
            "threshold must lie in [0, 1], got {threshold}"
        );
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = BTreeSet::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let u: f64 = rng.gen();
                if u > threshold {
                    edges.insert((i, j));
                }
            }
        }
        Ok(Self { n, edges })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(i, j)` pairs with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i != j && self.edges.contains(&(i.min(j), i.max(j)))
    }

    /// Neighbors of `i` in ascending order.
    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        (0..self.n).filter(|&j| self.has_edge(i, j)).collect()
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors(i).len()
    }

    /// Non-adjacent unordered pairs `(i, j)` with `i < j`, in lexicographic
    /// order. These are the structural zeros any weighted Laplacian on this
    /// topology must respect.
    pub fn non_edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if !self.edges.contains(&(i, j)) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Breadth-first connectivity check.
    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return false;
        }
        let mut seen = vec![false; self.n];
        let mut queue = std::collections::VecDeque::new();
        seen[0] = true;
        queue.push_back(0);
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for w in self.neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    queue.push_back(w);
                }
            }
        }
        count == self.n
    }
}
