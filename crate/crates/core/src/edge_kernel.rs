//! Edge-generating functions: symmetric maps from pairs of node states to
//! edge probabilities, and finite mixtures of them.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution as _;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SimpleGraph;
use crate::graphon::{hom_density_step, StepGraphon};
use crate::seed;
use crate::state_process::{Distribution, State, StateSpace};

/// Anything that assigns an edge probability to a pair of states.
///
/// [`EdgeKernel`] is symmetric by construction; the trait also admits
/// kernels that are only symmetric almost everywhere.
pub trait EdgeFunction {
    fn eval(&self, x: State, y: State) -> Result<f64>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelLiteral", into = "KernelLiteral")]
pub enum EdgeKernel {
    /// Same probability for every pair (Erdos-Renyi).
    Constant(f64),
    /// `m x m` matrix over finite states (stochastic block model), row-major.
    Block { m: usize, values: Vec<f64> },
    /// `r x r` matrix on the uniform grid of `[0,1]^2`.
    Grid { r: usize, values: Vec<f64> },
}

/// JSON form: `{"constant": 0.3}` | `{"block": [[..]]}` | `{"grid": [[..]]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelLiteral {
    Constant(f64),
    Block(Vec<Vec<f64>>),
    Grid(Vec<Vec<f64>>),
}

impl TryFrom<KernelLiteral> for EdgeKernel {
    type Error = Error;

    fn try_from(lit: KernelLiteral) -> Result<Self> {
        match lit {
            KernelLiteral::Constant(p) => EdgeKernel::constant(p),
            KernelLiteral::Block(rows) => EdgeKernel::block(rows),
            KernelLiteral::Grid(rows) => EdgeKernel::grid(rows),
        }
    }
}

impl From<EdgeKernel> for KernelLiteral {
    fn from(k: EdgeKernel) -> Self {
        let rows = |n: usize, v: &[f64]| v.chunks(n).map(<[f64]>::to_vec).collect();
        match k {
            EdgeKernel::Constant(p) => KernelLiteral::Constant(p),
            EdgeKernel::Block { m, values } => KernelLiteral::Block(rows(m, &values)),
            EdgeKernel::Grid { r, values } => KernelLiteral::Grid(rows(r, &values)),
        }
    }
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidKernel(format!("value {p} outside [0, 1]")))
    }
}

fn symmetric_matrix(rows: Vec<Vec<f64>>) -> Result<(usize, Vec<f64>)> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::InvalidKernel("kernel matrix is empty".into()));
    }
    let mut flat = Vec::with_capacity(n * n);
    for row in rows {
        if row.len() != n {
            return Err(Error::DimensionMismatch { what: "kernel matrix columns", expected: n, found: row.len() });
        }
        flat.extend(row);
    }
    for a in 0..n {
        for b in 0..n {
            check_probability(flat[a * n + b])?;
            if flat[a * n + b] != flat[b * n + a] {
                return Err(Error::InvalidKernel(format!("kernel matrix not symmetric at ({a},{b})")));
            }
        }
    }
    Ok((n, flat))
}

/// Grid cell of `x` among `r` cells; boundaries belong to the lower cell.
fn grid_cell(x: f64, r: usize) -> usize {
    if x <= 0.0 {
        0
    } else {
        ((x * r as f64).ceil() as usize).clamp(1, r) - 1
    }
}

impl EdgeKernel {
    pub fn constant(p: f64) -> Result<Self> {
        check_probability(p)?;
        Ok(EdgeKernel::Constant(p))
    }

    pub fn block(rows: Vec<Vec<f64>>) -> Result<Self> {
        let (m, values) = symmetric_matrix(rows)?;
        Ok(EdgeKernel::Block { m, values })
    }

    pub fn grid(rows: Vec<Vec<f64>>) -> Result<Self> {
        let (r, values) = symmetric_matrix(rows)?;
        Ok(EdgeKernel::Grid { r, values })
    }

    /// Checks that the kernel can be evaluated on states from `space`.
    pub fn check_space(&self, space: &StateSpace) -> Result<()> {
        match (self, space) {
            (EdgeKernel::Constant(_), _) => Ok(()),
            (EdgeKernel::Block { m, .. }, StateSpace::Finite(labels)) if *m == labels.len() => Ok(()),
            (EdgeKernel::Block { m, .. }, StateSpace::Finite(labels)) => Err(Error::DimensionMismatch {
                what: "block kernel size vs number of process states",
                expected: labels.len(),
                found: *m,
            }),
            (EdgeKernel::Grid { .. }, StateSpace::UnitInterval) => Ok(()),
            (EdgeKernel::Block { .. }, StateSpace::UnitInterval) => {
                Err(Error::InvalidKernel("block kernels need a finite state space".into()))
            }
            (EdgeKernel::Grid { .. }, StateSpace::Finite(_)) => {
                Err(Error::InvalidKernel("grid kernels need unit-interval states".into()))
            }
        }
    }

    /// Reduces `(kernel, dist)` to finitely many weighted states and their
    /// pairwise edge probabilities. Zero-mass states are kept.
    pub fn finite_form(&self, dist: &Distribution) -> Result<FiniteForm> {
        match (self, dist) {
            (EdgeKernel::Constant(p), _) => Ok(FiniteForm { probs: vec![1.0], values: vec![*p] }),
            (EdgeKernel::Block { m, values }, Distribution::Finite(probs)) => {
                if probs.len() != *m {
                    return Err(Error::DimensionMismatch {
                        what: "distribution length vs block kernel size",
                        expected: *m,
                        found: probs.len(),
                    });
                }
                Ok(FiniteForm { probs: probs.clone(), values: values.clone() })
            }
            (EdgeKernel::Grid { r, values }, Distribution::Uniform) => {
                Ok(FiniteForm { probs: vec![1.0 / *r as f64; *r], values: values.clone() })
            }
            (EdgeKernel::Grid { .. }, Distribution::Finite(_)) => Err(Error::UnsupportedSize(
                "grid kernels with non-uniform states are unsupported; pre-map states through the inverse CDF".into(),
            )),
            (EdgeKernel::Block { .. }, Distribution::Uniform) => {
                Err(Error::InvalidKernel("block kernels need a finite state distribution".into()))
            }
        }
    }
}

impl EdgeFunction for EdgeKernel {
    fn eval(&self, x: State, y: State) -> Result<f64> {
        match self {
            EdgeKernel::Constant(p) => Ok(*p),
            EdgeKernel::Block { m, values } => match (x, y) {
                (State::Discrete(a), State::Discrete(b)) if a < *m && b < *m => Ok(values[a * m + b]),
                (State::Discrete(a), State::Discrete(_)) if a >= *m => {
                    Err(Error::StateOutOfDomain { state: x.to_string(), domain: "block kernel states" })
                }
                (State::Discrete(_), _) => {
                    Err(Error::StateOutOfDomain { state: y.to_string(), domain: "block kernel states" })
                }
                _ => Err(Error::StateOutOfDomain { state: x.to_string(), domain: "block kernel states" }),
            },
            EdgeKernel::Grid { r, values } => {
                for s in [x, y] {
                    if !matches!(s, State::Continuous(v) if (0.0..=1.0).contains(&v)) {
                        return Err(Error::StateOutOfDomain { state: s.to_string(), domain: "[0, 1]" });
                    }
                }
                let (State::Continuous(u), State::Continuous(v)) = (x, y) else { unreachable!() };
                Ok(values[grid_cell(u, *r) * r + grid_cell(v, *r)])
            }
        }
    }
}

/// Finitely many state classes with masses `probs` and edge probabilities
/// `values` (row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteForm {
    pub probs: Vec<f64>,
    pub values: Vec<f64>,
}

impl FiniteForm {
    pub fn m(&self) -> usize {
        self.probs.len()
    }

    pub fn value(&self, a: usize, b: usize) -> f64 {
        self.values[a * self.m() + b]
    }
}

/// Largest `|e(x, y) - e(y, x)|` over `samples` pairs drawn from `dist`.
///
/// Asymmetry confined to a null set is never observed.
pub fn check_symmetry<K: EdgeFunction + ?Sized>(k: &K, dist: &Distribution, samples: usize, seed: u64) -> Result<f64> {
    if samples == 0 {
        return Err(Error::InvalidArgument("check_symmetry needs at least one sample".into()));
    }
    let mut rng = seed::derived_stream(seed, "symmetry", &[]);
    let finite = match dist {
        Distribution::Finite(p) => Some(WeightedIndex::new(p).map_err(|e| Error::InvalidDistribution(e.to_string()))?),
        Distribution::Uniform => None,
    };
    let draw = |rng: &mut seed::StreamRng| match &finite {
        Some(w) => State::Discrete(w.sample(rng)),
        None => State::Continuous(rng.random()),
    };
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let (x, y) = (draw(&mut rng), draw(&mut rng));
        worst = worst.max((k.eval(x, y)? - k.eval(y, x)?).abs());
    }
    Ok(worst)
}

/// Finite-support law over edge kernels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<MixtureComponent>", into = "Vec<MixtureComponent>")]
pub struct KernelMixture {
    components: Vec<MixtureComponent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponent {
    pub weight: f64,
    pub kernel: EdgeKernel,
}

impl TryFrom<Vec<MixtureComponent>> for KernelMixture {
    type Error = Error;

    fn try_from(components: Vec<MixtureComponent>) -> Result<Self> {
        Self::new(components.into_iter().map(|c| (c.weight, c.kernel)).collect())
    }
}

impl From<KernelMixture> for Vec<MixtureComponent> {
    fn from(m: KernelMixture) -> Self {
        m.components
    }
}

impl KernelMixture {
    pub fn new(components: Vec<(f64, EdgeKernel)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidKernel("mixture needs at least one component".into()));
        }
        let weights: Vec<f64> = components.iter().map(|(w, _)| *w).collect();
        if weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(Error::InvalidKernel("mixture weights must lie in [0, 1]".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidKernel(format!("mixture weights sum to {total}, not 1")));
        }
        Ok(KernelMixture {
            components: components.into_iter().map(|(weight, kernel)| MixtureComponent { weight, kernel }).collect(),
        })
    }

    pub fn single(kernel: EdgeKernel) -> Self {
        KernelMixture { components: vec![MixtureComponent { weight: 1.0, kernel }] }
    }

    pub fn components(&self) -> &[MixtureComponent] {
        &self.components
    }

    pub fn check_space(&self, space: &StateSpace) -> Result<()> {
        self.components.iter().try_for_each(|c| c.kernel.check_space(space))
    }
}

/// Draws one component according to the mixture weights.
pub fn sample_kernel(m: &KernelMixture, seed: u64) -> EdgeKernel {
    if m.components.len() == 1 {
        return m.components[0].kernel.clone();
    }
    let index = WeightedIndex::new(m.components.iter().map(|c| c.weight)).expect("validated weights");
    let mut rng = seed::derived_stream(seed, "kernel", &[]);
    m.components[index.sample(&mut rng)].kernel.clone()
}

/// Step graphon whose densities are the sampler's limiting subgraph
/// frequencies: one block per positive-mass state.
pub fn induced_graphon(k: &EdgeKernel, dist: &Distribution) -> Result<StepGraphon<f64>> {
    let form = k.finite_form(dist)?;
    let keep: Vec<usize> = (0..form.m()).filter(|&a| form.probs[a] > 0.0).collect();
    let values = keep.iter().map(|&a| keep.iter().map(|&b| form.value(a, b)).collect()).collect();
    StepGraphon::new(keep.iter().map(|&a| form.probs[a]).collect(), values)
}

/// `sum_c weight_c * t(F, induced_graphon(kernel_c, dist))`.
pub fn mixture_density(m: &KernelMixture, dist: &Distribution, f: &SimpleGraph) -> Result<f64> {
    m.components.iter().try_fold(0.0, |acc, c| {
        Ok(acc + c.weight * hom_density_step(f, &induced_graphon(&c.kernel, dist)?)?)
    })
}

/// JSON form of a model kernel: a single kernel literal or
/// `{"mixture": [{"weight": .., "kernel": {..}}, ..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelConfig {
    Constant(f64),
    Block(Vec<Vec<f64>>),
    Grid(Vec<Vec<f64>>),
    Mixture(KernelMixture),
}

impl KernelConfig {
    pub fn build(&self) -> Result<KernelMixture> {
        match self {
            KernelConfig::Constant(p) => Ok(KernelMixture::single(EdgeKernel::constant(*p)?)),
            KernelConfig::Block(rows) => Ok(KernelMixture::single(EdgeKernel::block(rows.clone())?)),
            KernelConfig::Grid(rows) => Ok(KernelMixture::single(EdgeKernel::grid(rows.clone())?)),
            KernelConfig::Mixture(m) => Ok(m.clone()),
        }
    }
}
