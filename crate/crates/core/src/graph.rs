//! Finite labeled simple graphs on `[n] = {1, ..., n}`.

use std::fmt;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest vertex count accepted by the brute-force isomorphism test.
pub const MAX_ISO_VERTICES: usize = 8;

/// A simple undirected graph with 1-indexed vertices.
///
/// Edges are stored as `(i, j)` with `i < j`, sorted lexicographically and
/// deduplicated, so structural equality is graph equality.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "GraphLiteral", into = "GraphLiteral")]
pub struct SimpleGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

/// JSON form: `{"n": 4, "edges": [[1,2],[1,3]]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphLiteral {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
}

impl TryFrom<GraphLiteral> for SimpleGraph {
    type Error = Error;

    fn try_from(lit: GraphLiteral) -> Result<Self> {
        SimpleGraph::new(lit.n, lit.edges.into_iter().map(|[a, b]| (a, b)))
    }
}

impl From<SimpleGraph> for GraphLiteral {
    fn from(g: SimpleGraph) -> Self {
        GraphLiteral {
            n: g.n,
            edges: g.edges.iter().map(|&(a, b)| [a, b]).collect(),
        }
    }
}

impl SimpleGraph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyVertexSet);
        }
        let mut canonical = Vec::new();
        for (a, b) in edges {
            for endpoint in [a, b] {
                if endpoint == 0 || endpoint > n {
                    return Err(Error::EndpointOutOfRange { endpoint, n });
                }
            }
            if a == b {
                return Err(Error::SelfLoop(a));
            }
            canonical.push((a.min(b), a.max(b)));
        }
        canonical.sort_unstable();
        canonical.dedup();
        Ok(SimpleGraph { n, edges: canonical })
    }

    pub fn empty(n: usize) -> Result<Self> {
        Self::new(n, [])
    }

    pub fn complete(n: usize) -> Result<Self> {
        Self::new(n, (1..=n).tuple_combinations())
    }

    /// Path `1 - 2 - ... - n`.
    pub fn path(n: usize) -> Result<Self> {
        Self::new(n, (1..n).map(|i| (i, i + 1)))
    }

    /// Star with center `center` joined to every other vertex.
    pub fn star(n: usize, center: usize) -> Result<Self> {
        Self::new(n, (1..=n).filter(|&v| v != center).map(|v| (center, v)))
    }

    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidArgument(format!("a cycle needs at least 3 vertices, got {n}")));
        }
        Self::new(n, (1..n).map(|i| (i, i + 1)).chain([(1, n)]))
    }

    pub fn edge() -> Self {
        Self::new(2, [(1, 2)]).expect("valid literal")
    }

    pub fn triangle() -> Self {
        Self::complete(3).expect("valid literal")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        a != b && self.edges.binary_search(&(a.min(b), a.max(b))).is_ok()
    }

    /// 0-indexed adjacency matrix, row-major `n * n`.
    pub fn adjacency(&self) -> Vec<bool> {
        let mut adj = vec![false; self.n * self.n];
        for &(a, b) in &self.edges {
            adj[(a - 1) * self.n + (b - 1)] = true;
            adj[(b - 1) * self.n + (a - 1)] = true;
        }
        adj
    }

    /// 0-indexed neighbor lists, each sorted ascending.
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(a, b) in &self.edges {
            adj[a - 1].push(b - 1);
            adj[b - 1].push(a - 1);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(a, b) in &self.edges {
            deg[a - 1] += 1;
            deg[b - 1] += 1;
        }
        deg
    }

    pub fn permute(&self, p: &VertexPermutation) -> Result<Self> {
        if p.len() != self.n {
            return Err(Error::DimensionMismatch {
                what: "permutation size",
                expected: self.n,
                found: p.len(),
            });
        }
        Self::new(self.n, self.edges.iter().map(|&(a, b)| (p.apply(a), p.apply(b))))
    }

    /// Subgraph induced on `vertices`, relabeled so `vertices[k]` becomes `k + 1`.
    pub fn induced_subgraph(&self, vertices: &[usize]) -> Result<Self> {
        for &v in vertices {
            if v == 0 || v > self.n {
                return Err(Error::EndpointOutOfRange { endpoint: v, n: self.n });
            }
        }
        if vertices.iter().duplicates().next().is_some() {
            return Err(Error::InvalidArgument("induced subgraph vertices must be distinct".into()));
        }
        let pairs = (0..vertices.len())
            .tuple_combinations()
            .filter(|&(x, y)| self.has_edge(vertices[x], vertices[y]))
            .map(|(x, y)| (x + 1, y + 1));
        Self::new(vertices.len(), pairs)
    }

    /// Disjoint union; `other`'s vertices are shifted past `self.n()`.
    pub fn disjoint_union(&self, other: &SimpleGraph) -> Self {
        let shift = self.n;
        let edges = self
            .edges
            .iter()
            .copied()
            .chain(other.edges.iter().map(|&(a, b)| (a + shift, b + shift)));
        Self::new(self.n + other.n, edges).expect("union of valid graphs")
    }

    /// Exhaustive isomorphism test, `n <= 8`.
    pub fn is_isomorphic(&self, other: &SimpleGraph) -> Result<bool> {
        let n = self.n.max(other.n);
        if n > MAX_ISO_VERTICES {
            return Err(Error::UnsupportedSize(format!(
                "isomorphism test supports at most {MAX_ISO_VERTICES} vertices, got {n}"
            )));
        }
        if self.n != other.n || self.edge_count() != other.edge_count() {
            return Ok(false);
        }
        let mut d1 = self.degrees();
        let mut d2 = other.degrees();
        d1.sort_unstable();
        d2.sort_unstable();
        if d1 != d2 {
            return Ok(false);
        }
        let deg1 = self.degrees();
        let deg2 = other.degrees();
        let target = other.adjacency();
        Ok((0..n).permutations(n).any(|images| {
            images.iter().enumerate().all(|(v, &w)| deg1[v] == deg2[w])
                && self
                    .edges
                    .iter()
                    .all(|&(a, b)| target[images[a - 1] * n + images[b - 1]])
        }))
    }

    /// Every labeled simple graph on `n` vertices, in edge-bitmask order.
    pub fn all_labeled(n: usize) -> impl Iterator<Item = SimpleGraph> {
        let pairs: Vec<(usize, usize)> = (1..=n).tuple_combinations().collect();
        assert!(pairs.len() < 32, "too many labeled graphs to enumerate");
        (0u32..(1u32 << pairs.len())).map(move |mask| {
            let edges = pairs
                .iter()
                .enumerate()
                .filter(|(bit, _)| mask >> bit & 1 == 1)
                .map(|(_, &e)| e);
            SimpleGraph::new(n, edges).expect("pairs are valid")
        })
    }

    /// Position of this graph in [`SimpleGraph::all_labeled`] order.
    pub fn labeled_index(&self) -> usize {
        (1..=self.n)
            .tuple_combinations()
            .enumerate()
            .filter(|(_, (a, b))| self.has_edge(*a, *b))
            .map(|(bit, _)| 1usize << bit)
            .sum()
    }

    /// One representative per isomorphism class on `n` vertices.
    pub fn isomorphism_classes(n: usize) -> Vec<SimpleGraph> {
        let mut reps: Vec<SimpleGraph> = Vec::new();
        for g in Self::all_labeled(n) {
            if !reps.iter().any(|r| r.is_isomorphic(&g).unwrap_or(false)) {
                reps.push(g);
            }
        }
        reps
    }
}

impl fmt::Debug for SimpleGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "([{}], {:?})", self.n, self.edges)
    }
}

/// Bijection on `[n]`, stored as 1-indexed images.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct VertexPermutation {
    images: Vec<usize>,
}

impl TryFrom<Vec<usize>> for VertexPermutation {
    type Error = Error;

    fn try_from(images: Vec<usize>) -> Result<Self> {
        Self::new(images)
    }
}

impl From<VertexPermutation> for Vec<usize> {
    fn from(p: VertexPermutation) -> Self {
        p.images
    }
}

impl VertexPermutation {
    /// `images[i - 1]` is the image of vertex `i`.
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &v in &images {
            if v == 0 || v > n {
                return Err(Error::InvalidPermutation { n, reason: format!("image {v} out of range") });
            }
            if std::mem::replace(&mut seen[v - 1], true) {
                return Err(Error::InvalidPermutation { n, reason: format!("image {v} repeated") });
            }
        }
        Ok(VertexPermutation { images })
    }

    pub fn identity(n: usize) -> Self {
        VertexPermutation { images: (1..=n).collect() }
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn apply(&self, v: usize) -> usize {
        self.images[v - 1]
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.images.len()];
        for (i, &v) in self.images.iter().enumerate() {
            inv[v - 1] = i + 1;
        }
        VertexPermutation { images: inv }
    }

    /// `self` after `other`: `v -> self(other(v))`.
    pub fn compose(&self, other: &VertexPermutation) -> Self {
        VertexPermutation {
            images: other.images.iter().map(|&v| self.apply(v)).collect(),
        }
    }

    pub fn all(n: usize) -> impl Iterator<Item = VertexPermutation> {
        (1..=n).permutations(n).map(|images| VertexPermutation { images })
    }
}
