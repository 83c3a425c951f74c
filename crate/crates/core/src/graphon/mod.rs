//! Step graphons and the quantities computed on them.
//!
//! A step graphon is constant on the cells of a finite partition of `[0,1]`
//! into intervals of lengths `pi_1, ..., pi_k` (block measures). Everything
//! in this module is generic over [`Scalar`], so the same routines evaluate
//! exactly on rationals and approximately on floats.

mod cut;
mod markov;

pub use cut::{
    cut_distance, cut_norm, cut_norm_seeded, CutDistance, CutNorm, CUT_NORM_RESTARTS,
    DEFAULT_CUT_NORM_SEED, MAX_CUT_DISTANCE_GRID, MAX_EXACT_CUT_NORM_BLOCKS,
};
pub use markov::{kernel_smooth, TransitionMatrix};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SimpleGraph;
use crate::homomorphism::check_pattern_size;
use crate::scalar::Scalar;
use crate::seed;

/// Largest number of block assignments `k^|V(F)|` the exact density sums over.
pub const MAX_EXACT_ASSIGNMENTS: u64 = 100_000_000;

/// JSON form shared by step graphons and signed step kernels:
/// `{"block_measures": [...], "values": [[...], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepLiteral<T> {
    pub block_measures: Vec<T>,
    pub values: Vec<Vec<T>>,
}

fn validate_measures<T: Scalar>(measures: &[T]) -> Result<()> {
    if measures.is_empty() {
        return Err(Error::InvalidGraphon("at least one block is required".into()));
    }
    if let Some(m) = measures.iter().find(|m| **m <= T::zero()) {
        return Err(Error::InvalidGraphon(format!("block measure {m} is not positive")));
    }
    let total = measures.iter().fold(T::zero(), |acc, &m| acc + m);
    if !total.approx_eq(T::one()) {
        return Err(Error::InvalidGraphon(format!("block measures sum to {total}, not 1")));
    }
    Ok(())
}

/// Flattens a square symmetric matrix with entries in `[lo, hi]`.
fn validate_matrix<T: Scalar>(k: usize, rows: Vec<Vec<T>>, lo: T, hi: T) -> Result<Vec<T>> {
    if rows.len() != k {
        return Err(Error::DimensionMismatch { what: "value matrix rows", expected: k, found: rows.len() });
    }
    let mut flat = Vec::with_capacity(k * k);
    for row in rows {
        if row.len() != k {
            return Err(Error::DimensionMismatch { what: "value matrix columns", expected: k, found: row.len() });
        }
        flat.extend(row);
    }
    for a in 0..k {
        for b in 0..k {
            let v = flat[a * k + b];
            if v < lo || v > hi {
                return Err(Error::InvalidGraphon(format!("entry ({a},{b}) = {v} outside [{lo}, {hi}]")));
            }
            if b > a && v != flat[b * k + a] {
                return Err(Error::InvalidGraphon(format!("value matrix not symmetric at ({a},{b})")));
            }
        }
    }
    Ok(flat)
}

fn to_rows<T: Copy>(k: usize, flat: &[T]) -> Vec<Vec<T>> {
    flat.chunks(k).map(<[T]>::to_vec).collect()
}

/// A graphon constant on blocks: `w(x, y) = W[a][b]` for `x` in block `a`, `y` in block `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "StepLiteral<T>",
    into = "StepLiteral<T>",
    bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>")
)]
pub struct StepGraphon<T> {
    measures: Vec<T>,
    values: Vec<T>,
}

impl<T: Scalar> TryFrom<StepLiteral<T>> for StepGraphon<T> {
    type Error = Error;

    fn try_from(lit: StepLiteral<T>) -> Result<Self> {
        Self::new(lit.block_measures, lit.values)
    }
}

impl<T: Scalar> From<StepGraphon<T>> for StepLiteral<T> {
    fn from(w: StepGraphon<T>) -> Self {
        StepLiteral { values: w.values_matrix(), block_measures: w.measures }
    }
}

impl<T: Scalar> StepGraphon<T> {
    pub fn new(block_measures: Vec<T>, values: Vec<Vec<T>>) -> Result<Self> {
        validate_measures(&block_measures)?;
        let values = validate_matrix(block_measures.len(), values, T::zero(), T::one())?;
        Ok(StepGraphon { measures: block_measures, values })
    }

    /// `k` blocks of measure `1/k`.
    pub fn equal_blocks(values: Vec<Vec<T>>) -> Result<Self> {
        let k = values.len().max(1);
        Self::new(vec![T::one() / T::from_count(k); k], values)
    }

    pub fn constant(p: T) -> Result<Self> {
        Self::new(vec![T::one()], vec![vec![p]])
    }

    pub fn k(&self) -> usize {
        self.measures.len()
    }

    pub fn block_measures(&self) -> &[T] {
        &self.measures
    }

    pub fn value(&self, a: usize, b: usize) -> T {
        self.values[a * self.k() + b]
    }

    pub fn values_matrix(&self) -> Vec<Vec<T>> {
        to_rows(self.k(), &self.values)
    }

    pub fn has_equal_blocks(&self) -> bool {
        let expected = T::one() / T::from_count(self.k());
        self.measures.iter().all(|m| m.approx_eq(expected))
    }

    /// `t(edge, w) = sum_ab pi_a pi_b W_ab`.
    pub fn edge_density(&self) -> T {
        let k = self.k();
        (0..k)
            .flat_map(|a| (0..k).map(move |b| (a, b)))
            .fold(T::zero(), |acc, (a, b)| acc + self.measures[a] * self.measures[b] * self.value(a, b))
    }

    /// `w(phi(x), phi(y))` for the block relabeling `phi`, given as 0-indexed images.
    ///
    /// Only measure preserving when the relabeled blocks have equal measure;
    /// the measures move with their blocks.
    pub fn permute_blocks(&self, phi: &[usize]) -> Result<Self> {
        let k = self.k();
        if phi.len() != k {
            return Err(Error::DimensionMismatch { what: "block permutation", expected: k, found: phi.len() });
        }
        let values = (0..k)
            .map(|a| (0..k).map(|b| self.value(phi[a], phi[b])).collect())
            .collect();
        Self::new(phi.iter().map(|&a| self.measures[a]).collect(), values)
    }

    /// The same function written on `m` equal blocks; requires every block
    /// measure to be a multiple of `1/m`.
    pub fn refine(&self, m: usize) -> Result<Self> {
        let spans = grid_spans(&self.measures, m).ok_or_else(|| {
            Error::InvalidGraphon(format!("block measures are not multiples of 1/{m}"))
        })?;
        let cell_block: Vec<usize> = spans
            .iter()
            .enumerate()
            .flat_map(|(block, &span)| std::iter::repeat_n(block, span))
            .collect();
        let values = (0..m)
            .map(|x| (0..m).map(|y| self.value(cell_block[x], cell_block[y])).collect())
            .collect();
        Self::equal_blocks(values)
    }

    pub fn map_scalar<U: Scalar>(&self, f: impl Fn(T) -> U) -> Result<StepGraphon<U>> {
        StepGraphon::new(
            self.measures.iter().map(|&m| f(m)).collect(),
            self.values_matrix().into_iter().map(|row| row.into_iter().map(&f).collect()).collect(),
        )
    }
}

/// Number of `1/m` cells each block spans, if every measure is a multiple of `1/m`.
fn grid_spans<T: Scalar>(measures: &[T], m: usize) -> Option<Vec<usize>> {
    let scale = T::from_count(m);
    measures
        .iter()
        .map(|&mu| {
            let cells = (mu * scale).to_f64_lossy().round();
            let cells_usize = cells as usize;
            (cells >= 1.0 && (mu * scale).approx_eq(T::from_count(cells_usize))).then_some(cells_usize)
        })
        .collect()
}

/// Symmetric step kernel with values in `[-1, 1]`, the shape of `w1 - w2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "StepLiteral<T>",
    into = "StepLiteral<T>",
    bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>")
)]
pub struct SignedStepKernel<T> {
    measures: Vec<T>,
    values: Vec<T>,
}

impl<T: Scalar> TryFrom<StepLiteral<T>> for SignedStepKernel<T> {
    type Error = Error;

    fn try_from(lit: StepLiteral<T>) -> Result<Self> {
        Self::new(lit.block_measures, lit.values)
    }
}

impl<T: Scalar> From<SignedStepKernel<T>> for StepLiteral<T> {
    fn from(u: SignedStepKernel<T>) -> Self {
        StepLiteral { values: to_rows(u.k(), &u.values), block_measures: u.measures }
    }
}

impl<T: Scalar> SignedStepKernel<T> {
    pub fn new(block_measures: Vec<T>, values: Vec<Vec<T>>) -> Result<Self> {
        validate_measures(&block_measures)?;
        let values = validate_matrix(block_measures.len(), values, -T::one(), T::one())?;
        Ok(SignedStepKernel { measures: block_measures, values })
    }

    pub fn equal_blocks(values: Vec<Vec<T>>) -> Result<Self> {
        let k = values.len().max(1);
        Self::new(vec![T::one() / T::from_count(k); k], values)
    }

    /// `w1 - w2` on a shared partition.
    pub fn difference(w1: &StepGraphon<T>, w2: &StepGraphon<T>) -> Result<Self> {
        if w1.k() != w2.k() {
            return Err(Error::DimensionMismatch { what: "block count", expected: w1.k(), found: w2.k() });
        }
        if !w1.measures.iter().zip(&w2.measures).all(|(a, b)| a.approx_eq(*b)) {
            return Err(Error::InvalidGraphon("graphons are not on the same partition; refine first".into()));
        }
        Ok(SignedStepKernel {
            measures: w1.measures.clone(),
            values: w1.values.iter().zip(&w2.values).map(|(&a, &b)| a - b).collect(),
        })
    }

    pub fn k(&self) -> usize {
        self.measures.len()
    }

    pub fn block_measures(&self) -> &[T] {
        &self.measures
    }

    pub fn value(&self, a: usize, b: usize) -> T {
        self.values[a * self.k() + b]
    }

    pub fn negate(&self) -> Self {
        SignedStepKernel { measures: self.measures.clone(), values: self.values.iter().map(|&v| -v).collect() }
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |acc, v| if v.abs() > acc { v.abs() } else { acc })
    }
}

/// The graphon form of `g`: `n` equal blocks, `W_ab = 1` iff `(a, b)` is an edge.
pub fn graphon_from_graph<T: Scalar>(g: &SimpleGraph) -> StepGraphon<T> {
    let n = g.n();
    let adj = g.adjacency();
    let values = (0..n)
        .map(|a| (0..n).map(|b| if adj[a * n + b] { T::one() } else { T::zero() }).collect())
        .collect();
    StepGraphon::equal_blocks(values).expect("adjacency matrix is a valid graphon")
}

/// Exact `t(F, w)` for a step graphon, summing over all block assignments of `V(F)`.
pub fn hom_density_step<T: Scalar>(f: &SimpleGraph, w: &StepGraphon<T>) -> Result<T> {
    check_pattern_size(f)?;
    let k = w.k() as u64;
    let assignments = k.checked_pow(f.n() as u32).filter(|&a| a <= MAX_EXACT_ASSIGNMENTS);
    if assignments.is_none() {
        return Err(Error::UnsupportedSize(format!(
            "{} blocks ^ {} pattern vertices exceeds {MAX_EXACT_ASSIGNMENTS} assignments; use hom_density_mc",
            w.k(),
            f.n()
        )));
    }
    // Earlier neighbors of each pattern vertex, 0-indexed.
    let back: Vec<Vec<usize>> = f.neighbors().into_iter().enumerate()
        .map(|(v, nbrs)| nbrs.into_iter().filter(|&u| u < v).collect())
        .collect();
    let mut colors = vec![0usize; f.n()];
    Ok(accumulate(0, T::one(), &mut colors, &back, w))
}

fn accumulate<T: Scalar>(pos: usize, weight: T, colors: &mut [usize], back: &[Vec<usize>], w: &StepGraphon<T>) -> T {
    if pos == colors.len() {
        return weight;
    }
    let mut total = T::zero();
    for c in 0..w.k() {
        let mut next = weight * w.measures[c];
        for &u in &back[pos] {
            next = next * w.value(colors[u], c);
        }
        if next.is_zero() {
            continue;
        }
        colors[pos] = c;
        total = total + accumulate(pos + 1, next, colors, back, w);
    }
    total
}

/// Monte Carlo estimate of `t(F, w)` with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    /// Sample standard deviation over `sqrt(samples)`; NaN for a single sample.
    pub stderr: f64,
    pub samples: usize,
}

const MC_CHUNK: usize = 4096;

/// Draws `|V(F)|` uniform points per replicate and averages the product of
/// `w` over the edges of `F`. Chunk `c` of [`MC_CHUNK`] replicates uses the
/// stream `derive(seed, "mc", [c])`; chunks merge in index order, so the
/// result does not depend on the thread pool.
pub fn hom_density_mc<T: Scalar>(f: &SimpleGraph, w: &StepGraphon<T>, samples: usize, seed: u64) -> Result<McEstimate> {
    use rand::Rng;

    if samples == 0 {
        return Err(Error::InvalidArgument("hom_density_mc needs at least one sample".into()));
    }
    let k = w.k();
    let values: Vec<f64> = w.values.iter().map(|v| v.to_f64_lossy()).collect();
    let mut cumulative: Vec<f64> = w
        .measures
        .iter()
        .scan(0.0, |acc, m| {
            *acc += m.to_f64_lossy();
            Some(*acc)
        })
        .collect();
    cumulative[k - 1] = f64::INFINITY;
    let edges: Vec<(usize, usize)> = f.edges().iter().map(|&(a, b)| (a - 1, b - 1)).collect();
    let n_chunks = samples.div_ceil(MC_CHUNK);

    let partials: Vec<Welford> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = seed::derived_stream(seed, "mc", &[c as u64]);
            let len = MC_CHUNK.min(samples - c * MC_CHUNK);
            let mut blocks = vec![0usize; f.n()];
            let mut acc = Welford::default();
            for _ in 0..len {
                for b in blocks.iter_mut() {
                    let u: f64 = rng.random();
                    *b = cumulative.partition_point(|&edge| edge <= u);
                }
                let x = edges.iter().map(|&(i, j)| values[blocks[i] * k + blocks[j]]).product();
                acc.push(x);
            }
            acc
        })
        .collect();
    let total = partials.into_iter().fold(Welford::default(), Welford::merge);
    let stderr = if samples > 1 {
        (total.m2 / (total.n - 1.0)).sqrt() / total.n.sqrt()
    } else {
        f64::NAN
    };
    Ok(McEstimate { estimate: total.mean, stderr, samples })
}

#[derive(Debug, Default, Clone, Copy)]
struct Welford {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let delta = x - self.mean;
        self.mean += delta / self.n;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Welford) -> Welford {
        if other.n == 0.0 {
            return self;
        }
        if self.n == 0.0 {
            return other;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        Welford {
            n,
            mean: self.mean + delta * other.n / n,
            m2: self.m2 + other.m2 + delta * delta * self.n * other.n / n,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homomorphism::hom_density_graphs;
    use num_rational::Ratio;

    type Q = Ratio<i64>;

    fn running_g() -> SimpleGraph {
        SimpleGraph::new(4, [(1, 2), (1, 3)]).unwrap()
    }

    fn running_f() -> SimpleGraph {
        SimpleGraph::new(3, [(1, 2), (1, 3)]).unwrap()
    }

    fn sbm() -> StepGraphon<f64> {
        StepGraphon::equal_blocks(vec![vec![0.8, 0.2], vec![0.2, 0.8]]).unwrap()
    }

    #[test]
    fn graphon_form_of_running_example() {
        let w: StepGraphon<f64> = graphon_from_graph(&running_g());
        assert_eq!(w.block_measures(), &[0.25; 4]);
        for a in 0..4 {
            for b in 0..4 {
                let on = matches!((a, b), (0, 1) | (1, 0) | (0, 2) | (2, 0));
                assert_eq!(w.value(a, b), if on { 1.0 } else { 0.0 });
            }
        }
        let empty: StepGraphon<f64> = graphon_from_graph(&SimpleGraph::empty(3).unwrap());
        assert!(empty.values_matrix().iter().flatten().all(|&v| v == 0.0));
        let k2: StepGraphon<f64> = graphon_from_graph(&SimpleGraph::edge());
        assert_eq!(k2.values_matrix(), vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
    }

    #[test]
    fn step_density_examples() {
        let w: StepGraphon<f64> = graphon_from_graph(&running_g());
        assert!((hom_density_step(&running_f(), &w).unwrap() - 0.09375).abs() < 1e-12);

        let exact: StepGraphon<Q> = graphon_from_graph(&running_g());
        assert_eq!(hom_density_step(&running_f(), &exact).unwrap(), Q::new(6, 64));

        let constant = StepGraphon::constant(0.3_f64).unwrap();
        assert!((hom_density_step(&SimpleGraph::triangle(), &constant).unwrap() - 0.027).abs() < 1e-15);

        assert!((hom_density_step(&SimpleGraph::edge(), &sbm()).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn step_density_size_guard() {
        let big = StepGraphon::equal_blocks(vec![vec![0.5; 11]; 11]).unwrap();
        let f = SimpleGraph::path(8).unwrap();
        assert!(matches!(hom_density_step(&f, &big), Err(Error::UnsupportedSize(_))));
        assert!(matches!(hom_density_step(&SimpleGraph::empty(9).unwrap(), &sbm()), Err(Error::UnsupportedSize(_))));
    }

    #[test]
    fn step_density_matches_graph_density_on_corpus() {
        let patterns: Vec<SimpleGraph> = (1..=4).flat_map(SimpleGraph::all_labeled).collect();
        let graphs: Vec<SimpleGraph> = (1..=4).flat_map(SimpleGraph::all_labeled).collect();
        for g in &graphs {
            let w: StepGraphon<f64> = graphon_from_graph(g);
            let wq: StepGraphon<Q> = graphon_from_graph(g);
            for f in &patterns {
                let exact = hom_density_graphs(f, g).unwrap();
                assert!((hom_density_step(f, &w).unwrap() - exact.density()).abs() <= 1e-12);
                let r = hom_density_step(f, &wq).unwrap();
                assert_eq!(
                    (*r.numer() as u128, *r.denom() as u128),
                    (*exact.ratio().numer(), *exact.ratio().denom())
                );
            }
        }
    }

    #[test]
    fn generic_over_f32() {
        let w: StepGraphon<f32> = graphon_from_graph(&running_g());
        assert!((hom_density_step(&running_f(), &w).unwrap() - 0.09375).abs() < 1e-6);
    }

    #[test]
    fn validation() {
        assert!(StepGraphon::new(vec![0.5, 0.4], vec![vec![0.0; 2]; 2]).is_err());
        assert!(StepGraphon::new(vec![1.0], vec![vec![1.5]]).is_err());
        assert!(StepGraphon::equal_blocks(vec![vec![0.1, 0.2], vec![0.3, 0.1]]).is_err());
        assert!(StepGraphon::new(vec![1.0, 0.0], vec![vec![0.0; 2]; 2]).is_err());
        assert!(SignedStepKernel::equal_blocks(vec![vec![-0.5]]).is_ok());
        assert!(SignedStepKernel::equal_blocks(vec![vec![-1.5]]).is_err());
    }

    #[test]
    fn json_literal() {
        let w: StepGraphon<f64> =
            serde_json::from_str(r#"{"block_measures":[0.5,0.5],"values":[[0.8,0.2],[0.2,0.8]]}"#).unwrap();
        assert_eq!(w, sbm());
        let back: StepGraphon<f64> = serde_json::from_str(&serde_json::to_string(&w).unwrap()).unwrap();
        assert_eq!(back, w);
        assert!(serde_json::from_str::<StepGraphon<f64>>(r#"{"block_measures":[1.0],"values":[[2.0]]}"#).is_err());
    }

    #[test]
    fn refine_and_permute() {
        let w = StepGraphon::new(vec![0.25_f64, 0.75], vec![vec![1.0, 0.0], vec![0.0, 0.5]]).unwrap();
        let r = w.refine(4).unwrap();
        assert_eq!(r.k(), 4);
        assert_eq!(r.value(0, 0), 1.0);
        assert_eq!(r.value(3, 2), 0.5);
        assert!((r.edge_density() - w.edge_density()).abs() < 1e-15);
        assert!(w.refine(3).is_err());
        let p = sbm().permute_blocks(&[1, 0]).unwrap();
        assert_eq!(p, sbm());
    }

    #[test]
    fn monte_carlo_examples() {
        let constant = StepGraphon::constant(0.3).unwrap();
        let est = hom_density_mc(&SimpleGraph::edge(), &constant, 100_000, 1).unwrap();
        assert!((est.estimate - 0.3).abs() <= 3.0 * est.stderr.max(1e-12));

        let w: StepGraphon<f64> = graphon_from_graph(&running_g());
        let est = hom_density_mc(&running_f(), &w, 1_000_000, 2).unwrap();
        assert!((est.estimate - 0.09375).abs() <= 3.0 * est.stderr, "{est:?}");

        let diag = StepGraphon::equal_blocks(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(hom_density_step(&SimpleGraph::triangle(), &diag).unwrap(), 0.25);
        let est = hom_density_mc(&SimpleGraph::triangle(), &diag, 200_000, 3).unwrap();
        assert!((est.estimate - 0.25).abs() <= 3.0 * est.stderr, "{est:?}");
    }

    #[test]
    fn monte_carlo_is_reproducible() {
        let a = hom_density_mc(&running_f(), &sbm(), 10_000, 9).unwrap();
        let b = hom_density_mc(&running_f(), &sbm(), 10_000, 9).unwrap();
        assert_eq!(a, b);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let c = pool.install(|| hom_density_mc(&running_f(), &sbm(), 10_000, 9).unwrap());
        assert_eq!(a, c);
        assert!(hom_density_mc(&running_f(), &sbm(), 0, 9).is_err());
    }

    #[test]
    fn monte_carlo_within_four_stderr_over_seeds() {
        let w = StepGraphon::new(vec![0.2, 0.3, 0.5], vec![
            vec![0.9, 0.1, 0.4],
            vec![0.1, 0.6, 0.3],
            vec![0.4, 0.3, 0.2],
        ])
        .unwrap();
        let f = SimpleGraph::path(3).unwrap();
        let exact = hom_density_step(&f, &w).unwrap();
        let hits = (0..100)
            .filter(|&s| {
                let est = hom_density_mc(&f, &w, 2_000, s).unwrap();
                (est.estimate - exact).abs() <= 4.0 * est.stderr
            })
            .count();
        assert!(hits >= 99, "{hits}/100 runs inside 4 stderr");
    }
}
