//! Exact homomorphism counts and densities between finite simple graphs.

use std::fmt;

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::SimpleGraph;

/// Patterns larger than this are rejected by every homomorphism routine.
pub const MAX_PATTERN_VERTICES: usize = 8;

/// `|hom(F, G)|` together with the number of all maps `|V(G)|^|V(F)|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct HomCount {
    pub count: u128,
    pub total_maps: u128,
}

impl HomCount {
    /// Exact density `count / total_maps`, reduced.
    pub fn ratio(&self) -> Ratio<u128> {
        Ratio::new(self.count, self.total_maps)
    }

    pub fn density(&self) -> f64 {
        self.count as f64 / self.total_maps as f64
    }
}

/// Unreduced fraction, e.g. `6/64`.
impl fmt::Display for HomCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.count, self.total_maps)
    }
}

pub(crate) fn check_pattern_size(f: &SimpleGraph) -> Result<()> {
    if f.n() > MAX_PATTERN_VERTICES {
        return Err(Error::UnsupportedSize(format!(
            "pattern has {} vertices; at most {MAX_PATTERN_VERTICES} are supported",
            f.n()
        )));
    }
    Ok(())
}

/// Counts maps `V(F) -> V(G)` sending every edge of `F` to an edge of `G`.
///
/// Each connected component of `F` is enumerated separately in BFS order,
/// so every non-root vertex only ranges over the neighbors of its parent's
/// image. Component counts multiply.
pub fn hom_count(f: &SimpleGraph, g: &SimpleGraph) -> Result<HomCount> {
    check_pattern_size(f)?;
    let total_maps = (g.n() as u128).pow(f.n() as u32);
    let g_nbrs = g.neighbors();
    let f_nbrs = f.neighbors();

    let mut count: u128 = 1;
    let mut visited = vec![false; f.n()];
    for root in 0..f.n() {
        if visited[root] {
            continue;
        }
        let plan = ComponentPlan::bfs(root, &f_nbrs, &mut visited);
        count *= plan.count(&g_nbrs);
        if count == 0 {
            break;
        }
    }
    Ok(HomCount { count, total_maps })
}

/// `t(F, G) = |hom(F, G)| / |V(G)|^|V(F)|`.
pub fn hom_density_graphs(f: &SimpleGraph, g: &SimpleGraph) -> Result<HomCount> {
    hom_count(f, g)
}

struct ComponentPlan {
    /// For each position in BFS order, the earlier positions adjacent to it.
    /// The first entry is the BFS parent.
    back_edges: Vec<Vec<usize>>,
}

impl ComponentPlan {
    fn bfs(root: usize, nbrs: &[Vec<usize>], visited: &mut [bool]) -> Self {
        let mut order = vec![root];
        visited[root] = true;
        let mut head = 0;
        while head < order.len() {
            let v = order[head];
            head += 1;
            for &w in &nbrs[v] {
                if !visited[w] {
                    visited[w] = true;
                    order.push(w);
                }
            }
        }
        let mut position = vec![usize::MAX; nbrs.len()];
        for (pos, &v) in order.iter().enumerate() {
            position[v] = pos;
        }
        let back_edges = order
            .iter()
            .enumerate()
            .map(|(pos, &v)| {
                let mut earlier: Vec<usize> =
                    nbrs[v].iter().map(|&w| position[w]).filter(|&p| p < pos).collect();
                // BFS parent has the smallest position among earlier neighbors.
                earlier.sort_unstable();
                earlier
            })
            .collect();
        ComponentPlan { back_edges }
    }

    fn count(&self, g_nbrs: &[Vec<usize>]) -> u128 {
        let mut images = vec![0usize; self.back_edges.len()];
        self.extend(0, &mut images, g_nbrs)
    }

    fn extend(&self, pos: usize, images: &mut [usize], g_nbrs: &[Vec<usize>]) -> u128 {
        if pos == self.back_edges.len() {
            return 1;
        }
        let earlier = &self.back_edges[pos];
        let Some((&parent, rest)) = earlier.split_first() else {
            // Only the component root has no earlier neighbor.
            if pos + 1 == self.back_edges.len() {
                return g_nbrs.len() as u128;
            }
            return (0..g_nbrs.len())
                .map(|x| {
                    images[pos] = x;
                    self.extend(pos + 1, images, g_nbrs)
                })
                .sum();
        };
        let last = pos + 1 == self.back_edges.len();
        let mut total = 0u128;
        for &x in &g_nbrs[images[parent]] {
            if !rest.iter().all(|&u| g_nbrs[images[u]].binary_search(&x).is_ok()) {
                continue;
            }
            if last {
                total += 1;
            } else {
                images[pos] = x;
                total += self.extend(pos + 1, images, g_nbrs);
            }
        }
        total
    }
}
