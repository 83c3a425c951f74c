//! The state-driven sampler.
//!
//! Given node states `v`, each pair `{i, j}` carries an edge independently
//! with probability `e(v_i, v_j)`. A dynamic graph is produced by running the
//! node-state processes forward and resampling every edge at every step from
//! the current states: snapshots are conditionally independent given the
//! states, and all temporal correlation comes from the states.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::edge_kernel::{sample_kernel, EdgeFunction, EdgeKernel, KernelMixture};
use crate::error::{Error, Result};
use crate::graph::SimpleGraph;
use crate::seed;
use crate::state_process::{sample_states, Distribution, State, StateProcess, StateTrajectory};

/// Largest number of state tuples `m^n` summed by [`marginal_prob`].
pub const MAX_STATE_TUPLES: u64 = 100_000_000;

/// Above this many vertices the conditional probability is accumulated in log space.
const LOG_SPACE_VERTICES: usize = 40;

/// `P(A | v) = prod_{i<j} e(v_i, v_j)^{A_ij} (1 - e(v_i, v_j))^{1 - A_ij}`.
pub fn conditional_prob<K: EdgeFunction + ?Sized>(a: &SimpleGraph, v: &[State], k: &K) -> Result<f64> {
    if a.n() >= LOG_SPACE_VERTICES {
        return Ok(conditional_log_prob(a, v, k)?.exp());
    }
    let mut prob = 1.0;
    for_each_pair_factor(a, v, k, |f| {
        prob *= f;
        prob != 0.0
    })?;
    Ok(prob)
}

/// Natural log of [`conditional_prob`]; `-inf` when the graph is impossible.
pub fn conditional_log_prob<K: EdgeFunction + ?Sized>(a: &SimpleGraph, v: &[State], k: &K) -> Result<f64> {
    let mut log_prob = 0.0;
    for_each_pair_factor(a, v, k, |f| {
        log_prob += f.ln();
        f != 0.0
    })?;
    Ok(log_prob)
}

/// Feeds each pair factor to `visit` until it returns false.
fn for_each_pair_factor<K: EdgeFunction + ?Sized>(
    a: &SimpleGraph,
    v: &[State],
    k: &K,
    mut visit: impl FnMut(f64) -> bool,
) -> Result<()> {
    let n = a.n();
    if v.len() != n {
        return Err(Error::DimensionMismatch { what: "state vector length", expected: n, found: v.len() });
    }
    let adj = a.adjacency();
    for i in 0..n {
        for j in i + 1..n {
            let p = k.eval(v[i], v[j])?;
            if !visit(if adj[i * n + j] { p } else { 1.0 - p }) {
                return Ok(());
            }
        }
    }
    Ok(())
}

/// `P(G_e(V) = A)` for i.i.d. node states with law `dist`.
pub fn marginal_prob(a: &SimpleGraph, dist: &Distribution, k: &EdgeKernel) -> Result<f64> {
    marginal_prob_product(a, &vec![dist.clone(); a.n()], k)
}

/// `P(G_e(V) = A)` for independent node states, node `i` with law `dists[i]`.
///
/// Exact sum over state tuples, assigning one node at a time and
/// multiplying in the pair factors to already-assigned nodes. The first
/// node's states are summed in parallel and reduced in index order.
pub fn marginal_prob_product(a: &SimpleGraph, dists: &[Distribution], k: &EdgeKernel) -> Result<f64> {
    let n = a.n();
    if dists.len() != n {
        return Err(Error::DimensionMismatch { what: "number of node distributions", expected: n, found: dists.len() });
    }
    let forms = dists.iter().map(|d| k.finite_form(d)).collect::<Result<Vec<_>>>()?;
    let m = forms[0].m();
    if forms.iter().any(|f| f.m() != m) {
        return Err(Error::InvalidDistribution("node distributions live on different state spaces".into()));
    }
    let tuples = (m as u64).checked_pow(n as u32).filter(|&t| t <= MAX_STATE_TUPLES);
    if tuples.is_none() {
        return Err(Error::UnsupportedSize(format!(
            "{m} states ^ {n} nodes exceeds {MAX_STATE_TUPLES} tuples; estimate by sampling instead"
        )));
    }
    let adj = a.adjacency();
    let values = &forms[0].values;
    let probs: Vec<&[f64]> = forms.iter().map(|f| f.probs.as_slice()).collect();
    let ctx = TupleSum { n, m, adj: &adj, values, probs: &probs };

    let partials: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|c| {
            let mut states = vec![0usize; n];
            states[0] = c;
            let w = probs[0][c];
            if w == 0.0 { 0.0 } else { ctx.extend(1, w, &mut states) }
        })
        .collect();
    Ok(partials.into_iter().sum())
}

struct TupleSum<'a> {
    n: usize,
    m: usize,
    adj: &'a [bool],
    values: &'a [f64],
    probs: &'a [&'a [f64]],
}

impl TupleSum<'_> {
    fn extend(&self, pos: usize, weight: f64, states: &mut [usize]) -> f64 {
        if pos == self.n {
            return weight;
        }
        let mut total = 0.0;
        for c in 0..self.m {
            let mut w = weight * self.probs[pos][c];
            for (j, &s) in states[..pos].iter().enumerate() {
                let p = self.values[s * self.m + c];
                w *= if self.adj[j * self.n + pos] { p } else { 1.0 - p };
            }
            if w == 0.0 {
                continue;
            }
            states[pos] = c;
            total += self.extend(pos + 1, w, states);
        }
        total
    }
}

/// One graph given node states. Pair `(i, j)` (1-indexed, `i < j`) draws a
/// single uniform from the stream `derive(seed, "pair", [i, j])`.
pub fn sample_graph<K: EdgeFunction + Sync + ?Sized>(k: &K, v: &[State], seed: u64) -> Result<SimpleGraph> {
    let n = v.len();
    if n == 0 {
        return Err(Error::EmptyVertexSet);
    }
    let rows: Vec<Vec<(usize, usize)>> = (1..=n)
        .into_par_iter()
        .map(|i| {
            let mut row = Vec::new();
            for j in i + 1..=n {
                let p = k.eval(v[i - 1], v[j - 1])?;
                let u: f64 = seed::derived_stream(seed, "pair", &[i as u64, j as u64]).random();
                if u < p {
                    row.push((i, j));
                }
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    SimpleGraph::new(n, rows.into_iter().flatten())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphTrajectory {
    pub snapshots: Vec<SimpleGraph>,
    pub states: StateTrajectory,
    pub kernel_used: EdgeKernel,
    pub seed: u64,
}

/// States from `derive(seed, "states", [])`; snapshot `t` from
/// `sample_graph(k, states_t, derive(seed, "step", [t]))`.
pub fn simulate_trajectory(
    process: &StateProcess,
    k: &EdgeKernel,
    n_nodes: usize,
    horizon: usize,
    seed: u64,
) -> Result<GraphTrajectory> {
    if n_nodes < 2 || horizon == 0 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 nodes and 1 step, got {n_nodes} nodes and {horizon} steps"
        )));
    }
    k.check_space(process.space())?;
    let states = sample_states(process, n_nodes, horizon, seed::derive(seed, "states", &[]))?;
    let snapshots = (0..horizon)
        .into_par_iter()
        .map(|t| sample_graph(k, &states.at(t), seed::derive(seed, "step", &[t as u64])))
        .collect::<Result<_>>()?;
    Ok(GraphTrajectory { snapshots, states, kernel_used: k.clone(), seed })
}

/// Draws one kernel from the mixture and keeps it for the whole trajectory.
pub fn simulate_mixture_trajectory(
    m: &KernelMixture,
    process: &StateProcess,
    n_nodes: usize,
    horizon: usize,
    seed: u64,
) -> Result<GraphTrajectory> {
    m.check_space(process.space())?;
    let kernel = sample_kernel(m, seed);
    simulate_trajectory(process, &kernel, n_nodes, horizon, seed)
}
