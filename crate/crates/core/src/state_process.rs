//! Node-state processes: i.i.d. sequences and finite Markov chains.

use std::fmt;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution as _;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphon::TransitionMatrix;
use crate::scalar::Scalar;
use crate::seed;

/// Tolerance for "initial distribution is stationary".
pub const STATIONARY_TOLERANCE: f64 = 1e-10;

/// Value taken by one node at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum State {
    /// Index into a finite state list.
    Discrete(usize),
    /// Point of `[0, 1]`.
    Continuous(f64),
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            State::Discrete(i) => write!(f, "#{i}"),
            State::Continuous(x) => write!(f, "{x}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateSpace {
    Finite(Vec<String>),
    UnitInterval,
}

impl StateSpace {
    pub fn finite(labels: impl IntoIterator<Item = impl Into<String>>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::InvalidDistribution("a finite state space needs at least one state".into()));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::InvalidDistribution(format!("duplicate state label {l:?}")));
            }
        }
        Ok(StateSpace::Finite(labels))
    }

    /// States labeled `s0, s1, ...`.
    pub fn indexed(m: usize) -> Result<Self> {
        Self::finite((0..m).map(|i| format!("s{i}")))
    }

    /// Number of states, `None` for the unit interval.
    pub fn size(&self) -> Option<usize> {
        match self {
            StateSpace::Finite(labels) => Some(labels.len()),
            StateSpace::UnitInterval => None,
        }
    }

    pub fn contains(&self, s: State) -> bool {
        match (self, s) {
            (StateSpace::Finite(l), State::Discrete(i)) => i < l.len(),
            (StateSpace::UnitInterval, State::Continuous(x)) => (0.0..=1.0).contains(&x),
            _ => false,
        }
    }
}

/// Marginal law of a node state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distribution {
    Finite(Vec<f64>),
    /// Lebesgue measure on `[0, 1]`.
    Uniform,
}

impl Distribution {
    pub fn finite(probs: Vec<f64>) -> Result<Self> {
        validate_probabilities(&probs)?;
        Ok(Distribution::Finite(probs))
    }

    pub fn probabilities(&self) -> Option<&[f64]> {
        match self {
            Distribution::Finite(p) => Some(p),
            Distribution::Uniform => None,
        }
    }

    fn check_against(&self, space: &StateSpace) -> Result<()> {
        match (self, space) {
            (Distribution::Finite(p), StateSpace::Finite(l)) => {
                validate_probabilities(p)?;
                if p.len() != l.len() {
                    return Err(Error::DimensionMismatch { what: "distribution length", expected: l.len(), found: p.len() });
                }
                Ok(())
            }
            (Distribution::Uniform, StateSpace::UnitInterval) => Ok(()),
            _ => Err(Error::InvalidDistribution("distribution does not live on the state space".into())),
        }
    }

    fn sampler(&self) -> Result<Sampler> {
        match self {
            Distribution::Finite(p) => WeightedIndex::new(p)
                .map(Sampler::Finite)
                .map_err(|e| Error::InvalidDistribution(e.to_string())),
            Distribution::Uniform => Ok(Sampler::Uniform),
        }
    }
}

fn validate_probabilities(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidDistribution("probability vector is empty".into()));
    }
    if let Some(x) = p.iter().find(|x| !(**x >= 0.0)) {
        return Err(Error::InvalidDistribution(format!("probability {x} is negative or NaN")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidDistribution(format!("probabilities sum to {total}, not 1")));
    }
    Ok(())
}

enum Sampler {
    Finite(WeightedIndex<f64>),
    Uniform,
}

impl Sampler {
    fn draw<R: Rng>(&self, rng: &mut R) -> State {
        match self {
            Sampler::Finite(w) => State::Discrete(w.sample(rng)),
            Sampler::Uniform => State::Continuous(rng.random()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProcessKind {
    Iid { marginal: Distribution },
    Markov { transition: TransitionMatrix<f64>, initial: Distribution },
}

/// Law of one node's state path `(V_{i,t})_t`; every node runs an
/// independent copy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateProcess {
    space: StateSpace,
    kind: ProcessKind,
    stationary: bool,
    weakly_mixing: bool,
}

/// i.i.d. states; always stationary and mixing.
pub fn make_iid(space: StateSpace, marginal: Distribution) -> Result<StateProcess> {
    marginal.check_against(&space)?;
    Ok(StateProcess { space, kind: ProcessKind::Iid { marginal }, stationary: true, weakly_mixing: true })
}

/// Finite Markov chain. Stationary iff `initial * P = initial`; weakly
/// mixing iff irreducible and aperiodic.
pub fn make_markov(space: StateSpace, transition: TransitionMatrix<f64>, initial: Distribution) -> Result<StateProcess> {
    let m = space
        .size()
        .ok_or_else(|| Error::InvalidDistribution("Markov chains need a finite state space".into()))?;
    if transition.k() != m {
        return Err(Error::DimensionMismatch { what: "transition matrix size", expected: m, found: transition.k() });
    }
    initial.check_against(&space)?;
    let init = initial.probabilities().expect("finite distribution");
    let stationary = transition
        .propagate(init)
        .iter()
        .zip(init)
        .all(|(a, b)| (a - b).abs() <= STATIONARY_TOLERANCE);
    let weakly_mixing = transition.is_aperiodic();
    Ok(StateProcess { space, kind: ProcessKind::Markov { transition, initial }, stationary, weakly_mixing })
}

impl StateProcess {
    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn kind(&self) -> &ProcessKind {
        &self.kind
    }

    pub fn is_stationary(&self) -> bool {
        self.stationary
    }

    pub fn is_weakly_mixing(&self) -> bool {
        self.weakly_mixing
    }

    /// Long-run marginal: the i.i.d. marginal, or the chain's stationary law.
    pub fn stationary_marginal(&self) -> Result<Distribution> {
        match &self.kind {
            ProcessKind::Iid { marginal } => Ok(marginal.clone()),
            ProcessKind::Markov { transition, initial } if self.stationary && !transition.is_irreducible() => {
                Ok(initial.clone())
            }
            ProcessKind::Markov { transition, .. } => Ok(Distribution::Finite(stationary_dist(transition)?)),
        }
    }

    /// Same chain started elsewhere; flags are recomputed.
    pub fn with_initial(&self, initial: Distribution) -> Result<StateProcess> {
        match &self.kind {
            ProcessKind::Iid { .. } => make_iid(self.space.clone(), initial),
            ProcessKind::Markov { transition, .. } => make_markov(self.space.clone(), transition.clone(), initial),
        }
    }

    fn sample_path<R: Rng>(&self, rng: &mut R, horizon: usize, out: &mut Vec<State>) -> Result<()> {
        match &self.kind {
            ProcessKind::Iid { marginal } => {
                let sampler = marginal.sampler()?;
                out.extend((0..horizon).map(|_| sampler.draw(rng)));
            }
            ProcessKind::Markov { transition, initial } => {
                let start = initial.sampler()?;
                let rows: Vec<Sampler> = (0..transition.k())
                    .map(|a| Distribution::Finite(transition.row(a).to_vec()).sampler())
                    .collect::<Result<_>>()?;
                let mut s = start.draw(rng);
                out.push(s);
                for _ in 1..horizon {
                    let State::Discrete(a) = s else { unreachable!("Markov states are discrete") };
                    s = rows[a].draw(rng);
                    out.push(s);
                }
            }
        }
        Ok(())
    }
}

/// Solves `pi P = pi`, `sum pi = 1` by Gaussian elimination with partial
/// pivoting. Exact when `T` is a rational type.
pub fn stationary_dist<T: Scalar>(p: &TransitionMatrix<T>) -> Result<Vec<T>> {
    let unreachable = p.unreachable_states();
    if !unreachable.is_empty() {
        return Err(Error::Reducible { unreachable });
    }
    let k = p.k();
    // Rows: (P^T - I) pi = 0 with the last equation replaced by sum pi = 1.
    let mut a: Vec<Vec<T>> = (0..k)
        .map(|i| {
            let mut row: Vec<T> = (0..k).map(|j| p.get(j, i) - if i == j { T::one() } else { T::zero() }).collect();
            row.push(T::zero());
            row
        })
        .collect();
    a[k - 1] = vec![T::one(); k + 1];

    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).expect("comparable"))
            .expect("non-empty range");
        if a[pivot][col].is_zero() {
            return Err(Error::InvalidTransition("singular stationary system".into()));
        }
        a.swap(col, pivot);
        for row in 0..k {
            if row != col && !a[row][col].is_zero() {
                let factor = a[row][col] / a[col][col];
                for j in col..=k {
                    let delta = factor * a[col][j];
                    a[row][j] = a[row][j] - delta;
                }
            }
        }
    }
    Ok((0..k).map(|i| a[i][k] / a[i][i]).collect())
}

/// Sampled states of `n_nodes` independent nodes over `horizon` steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateTrajectory {
    n_nodes: usize,
    horizon: usize,
    /// Node-major: `states[i * horizon + t]`.
    states: Vec<State>,
    seed: u64,
    stationary: bool,
    weakly_mixing: bool,
}

impl StateTrajectory {
    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Flags of the generating process.
    pub fn is_stationary(&self) -> bool {
        self.stationary
    }

    pub fn is_weakly_mixing(&self) -> bool {
        self.weakly_mixing
    }

    /// State of node `i` (0-indexed) at time `t`.
    pub fn get(&self, i: usize, t: usize) -> State {
        self.states[i * self.horizon + t]
    }

    pub fn node_path(&self, i: usize) -> &[State] {
        &self.states[i * self.horizon..(i + 1) * self.horizon]
    }

    /// All node states at time `t`.
    pub fn at(&self, t: usize) -> Vec<State> {
        (0..self.n_nodes).map(|i| self.get(i, t)).collect()
    }

    /// Drops the first `steps` time slices.
    pub fn shift(&self, steps: usize) -> Result<StateTrajectory> {
        if steps >= self.horizon {
            return Err(Error::InvalidArgument(format!(
                "cannot shift by {steps} steps a trajectory of length {}",
                self.horizon
            )));
        }
        let horizon = self.horizon - steps;
        let states = (0..self.n_nodes).flat_map(|i| self.node_path(i)[steps..].iter().copied()).collect();
        Ok(StateTrajectory { horizon, states, ..self.clone() })
    }
}

/// Samples node paths; node `i` (0-indexed) draws from the stream
/// `derive(seed, "node", [i])`, so paths are independent across nodes and
/// the result does not depend on the thread pool.
pub fn sample_states(process: &StateProcess, n_nodes: usize, horizon: usize, seed: u64) -> Result<StateTrajectory> {
    if n_nodes == 0 || horizon == 0 {
        return Err(Error::InvalidArgument("need at least one node and one time step".into()));
    }
    let paths: Vec<Vec<State>> = (0..n_nodes)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed::derived_stream(seed, "node", &[i as u64]);
            let mut path = Vec::with_capacity(horizon);
            process.sample_path(&mut rng, horizon, &mut path)?;
            Ok(path)
        })
        .collect::<Result<_>>()?;
    Ok(StateTrajectory {
        n_nodes,
        horizon,
        states: paths.concat(),
        seed,
        stationary: process.stationary,
        weakly_mixing: process.weakly_mixing,
    })
}

/// JSON form of a process:
/// `{"space": {"finite": ["s0","s1"]}, "kind": {"markov": {"P": [[..]], "init": [..]}}}`
/// or `{"kind": {"iid": {"marginal": [..]}}}`. Without `space`, a finite
/// space `s0, s1, ...` sized from the marginal is assumed; `"marginal": "uniform"`
/// selects the unit interval.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<SpaceConfig>,
    pub kind: KindConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceConfig {
    Finite(Vec<String>),
    UnitInterval,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum KindConfig {
    Iid { marginal: MarginalConfig },
    Markov {
        #[serde(rename = "P")]
        transition: Vec<Vec<f64>>,
        init: Vec<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MarginalConfig {
    Probabilities(Vec<f64>),
    Named(NamedMarginal),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedMarginal {
    Uniform,
}

impl ProcessConfig {
    pub fn build(&self) -> Result<StateProcess> {
        let space = match (&self.space, &self.kind) {
            (Some(SpaceConfig::Finite(labels)), _) => StateSpace::finite(labels.clone())?,
            (Some(SpaceConfig::UnitInterval), _) => StateSpace::UnitInterval,
            (None, KindConfig::Iid { marginal: MarginalConfig::Probabilities(p) }) => StateSpace::indexed(p.len())?,
            (None, KindConfig::Iid { marginal: MarginalConfig::Named(NamedMarginal::Uniform) }) => StateSpace::UnitInterval,
            (None, KindConfig::Markov { init, .. }) => StateSpace::indexed(init.len())?,
        };
        match &self.kind {
            KindConfig::Iid { marginal } => {
                let marginal = match marginal {
                    MarginalConfig::Probabilities(p) => Distribution::finite(p.clone())?,
                    MarginalConfig::Named(NamedMarginal::Uniform) => Distribution::Uniform,
                };
                make_iid(space, marginal)
            }
            KindConfig::Markov { transition, init } => {
                make_markov(space, TransitionMatrix::new(transition.clone())?, Distribution::finite(init.clone())?)
            }
        }
    }
}
