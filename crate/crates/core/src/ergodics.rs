//! Time-axis diagnostics: the shift, return times of a watched subgraph, and
//! Birkhoff averages of the conditional edge law along state paths.

use serde::{Deserialize, Serialize};

use crate::dynamics::{conditional_prob, marginal_prob, GraphTrajectory};
use crate::edge_kernel::EdgeKernel;
use crate::error::{Error, Result};
use crate::graph::{SimpleGraph, MAX_ISO_VERTICES};
use crate::homomorphism::check_pattern_size;
use crate::state_process::{sample_states, StateProcess, StateTrajectory};

/// Pushes time forward by `steps`.
pub fn shift(traj: &StateTrajectory, steps: usize) -> Result<StateTrajectory> {
    traj.shift(steps)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    /// Watched subgraph isomorphic to the pattern.
    #[default]
    Isomorphic,
    /// Watched subgraph equal to the pattern under the given vertex order.
    Labeled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceReport {
    pub pattern: SimpleGraph,
    /// 1-indexed; `watched_nodes[k]` plays pattern vertex `k + 1`.
    pub watched_nodes: Vec<usize>,
    /// Steps at which the watched subgraph matched, increasing.
    pub return_times: Vec<usize>,
    pub horizon: usize,
    /// Set when the generating process is not stationary, so recurrence is not guaranteed.
    pub non_stationary: bool,
}

impl RecurrenceReport {
    /// Returns strictly before `t`.
    pub fn count_before(&self, t: usize) -> usize {
        self.return_times.partition_point(|&r| r < t)
    }
}

/// Records every step where the subgraph induced on `watched_nodes` matches `pattern`.
pub fn recurrence_count(
    traj: &GraphTrajectory,
    pattern: &SimpleGraph,
    watched_nodes: &[usize],
    mode: MatchMode,
) -> Result<RecurrenceReport> {
    if pattern.n() != watched_nodes.len() {
        return Err(Error::DimensionMismatch {
            what: "watched nodes vs pattern vertices",
            expected: pattern.n(),
            found: watched_nodes.len(),
        });
    }
    if pattern.n() > MAX_ISO_VERTICES {
        return Err(Error::UnsupportedSize(format!(
            "at most {MAX_ISO_VERTICES} watched nodes are supported, got {}",
            pattern.n()
        )));
    }
    let mut return_times = Vec::new();
    for (t, g) in traj.snapshots.iter().enumerate() {
        let sub = g.induced_subgraph(watched_nodes)?;
        let hit = match mode {
            MatchMode::Isomorphic => sub.is_isomorphic(pattern)?,
            MatchMode::Labeled => sub == *pattern,
        };
        if hit {
            return_times.push(t);
        }
    }
    Ok(RecurrenceReport {
        pattern: pattern.clone(),
        watched_nodes: watched_nodes.to_vec(),
        return_times,
        horizon: traj.snapshots.len(),
        non_stationary: !traj.states.is_stationary(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BirkhoffSeries {
    /// Entry `i` is the mean of the first `i + 1` terms.
    pub partial_averages: Vec<f64>,
    /// Space average `P(G_e(V) = A_G)` under the stationary marginal; `None`
    /// when the chain has no unique stationary law.
    pub target: Option<f64>,
    pub horizon: usize,
    /// Set when the process is not weakly mixing, so convergence is not guaranteed.
    pub not_mixing: bool,
}

impl BirkhoffSeries {
    pub fn final_average(&self) -> f64 {
        *self.partial_averages.last().expect("horizon >= 1")
    }
}

/// Running means of `P(A_G | v_t)` along one sampled state path per pattern vertex.
///
/// Node paths come from `sample_states(process, |V(G)|, n_steps, seed)`.
pub fn birkhoff_average(
    process: &StateProcess,
    k: &EdgeKernel,
    pattern: &SimpleGraph,
    n_steps: usize,
    seed: u64,
) -> Result<BirkhoffSeries> {
    check_pattern_size(pattern)?;
    k.check_space(process.space())?;
    let states = sample_states(process, pattern.n(), n_steps, seed)?;
    let mut partial_averages = Vec::with_capacity(n_steps);
    let mut sum = 0.0;
    for t in 0..n_steps {
        sum += conditional_prob(pattern, &states.at(t), k)?;
        partial_averages.push(sum / (t + 1) as f64);
    }
    let target = match process.stationary_marginal() {
        Ok(marginal) => Some(marginal_prob(pattern, &marginal, k)?),
        Err(Error::Reducible { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(BirkhoffSeries { partial_averages, target, horizon: n_steps, not_mixing: !process.is_weakly_mixing() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::simulate_trajectory;
    use crate::graphon::TransitionMatrix;
    use crate::state_process::{make_iid, make_markov, Distribution, StateSpace};

    fn coin() -> StateProcess {
        make_iid(StateSpace::indexed(2).unwrap(), Distribution::Finite(vec![0.5, 0.5])).unwrap()
    }

    fn sticky(init: Vec<f64>) -> StateProcess {
        let p = TransitionMatrix::new(vec![vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap();
        make_markov(StateSpace::indexed(2).unwrap(), p, Distribution::Finite(init)).unwrap()
    }

    fn identity_kernel() -> EdgeKernel {
        EdgeKernel::block(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap()
    }

    #[test]
    fn shift_laws() {
        let x = sample_states(&sticky(vec![0.5, 0.5]), 3, 10, 1).unwrap();
        assert_eq!(shift(&x, 0).unwrap(), x);
        assert_eq!(shift(&shift(&x, 1).unwrap(), 1).unwrap(), shift(&x, 2).unwrap());
        let s = shift(&x, 4).unwrap();
        assert_eq!((s.n_nodes(), s.horizon()), (3, 6));
        assert_eq!(s.get(2, 0), x.get(2, 4));
        assert!(shift(&x, 10).is_err());

        let constant = make_iid(StateSpace::indexed(2).unwrap(), Distribution::Finite(vec![1.0, 0.0])).unwrap();
        let c = sample_states(&constant, 2, 5, 1).unwrap();
        assert_eq!(shift(&c, 2).unwrap().node_path(1), &c.node_path(1)[..3]);
    }

    #[test]
    fn shift_preserves_stationary_marginals() {
        let n = 4000;
        let x = sample_states(&sticky(vec![0.5, 0.5]), n, 60, 2).unwrap();
        let band = 3.0 * (0.25 / n as f64).sqrt();
        for s in [0, 17, 59] {
            let y = shift(&x, s).unwrap();
            let ones = y.at(0).iter().filter(|v| **v == crate::state_process::State::Discrete(1)).count();
            assert!((ones as f64 / n as f64 - 0.5).abs() <= band);
        }
    }

    #[test]
    fn recurrence_examples() {
        let complete = simulate_trajectory(&coin(), &EdgeKernel::constant(1.0).unwrap(), 5, 20, 1).unwrap();
        let r = recurrence_count(&complete, &SimpleGraph::complete(3).unwrap(), &[1, 3, 5], MatchMode::Isomorphic).unwrap();
        assert_eq!(r.return_times, (0..20).collect::<Vec<_>>());

        let empty = simulate_trajectory(&coin(), &EdgeKernel::constant(0.0).unwrap(), 5, 20, 1).unwrap();
        let r = recurrence_count(&empty, &SimpleGraph::edge(), &[2, 4], MatchMode::Isomorphic).unwrap();
        assert!(r.return_times.is_empty());
    }

    #[test]
    fn recurrence_binomial_count() {
        let traj = simulate_trajectory(&coin(), &identity_kernel(), 4, 1000, 3).unwrap();
        let r = recurrence_count(&traj, &SimpleGraph::edge(), &[1, 2], MatchMode::Isomorphic).unwrap();
        assert!(r.return_times.len().abs_diff(500) <= 47, "{}", r.return_times.len());
        assert!(r.return_times.windows(2).all(|w| w[0] < w[1]));
        assert!(!r.non_stationary);
    }

    #[test]
    fn recurrence_labeled_mode_and_warnings() {
        let traj = simulate_trajectory(&sticky(vec![1.0, 0.0]), &EdgeKernel::constant(1.0).unwrap(), 4, 10, 5).unwrap();
        let path = SimpleGraph::path(3).unwrap();
        let r = recurrence_count(&traj, &path, &[1, 2, 3], MatchMode::Labeled).unwrap();
        assert!(r.return_times.is_empty());
        assert!(r.non_stationary);
        let tri = SimpleGraph::triangle();
        assert_eq!(recurrence_count(&traj, &tri, &[3, 1, 2], MatchMode::Labeled).unwrap().return_times.len(), 10);
        assert!(recurrence_count(&traj, &tri, &[1, 2], MatchMode::Labeled).is_err());
        assert!(recurrence_count(&traj, &tri, &[1, 2, 9], MatchMode::Labeled).is_err());
    }

    #[test]
    fn birkhoff_iid_law_of_large_numbers() {
        let k = EdgeKernel::block(vec![vec![0.7, 0.2], vec![0.2, 0.4]]).unwrap();
        let pattern = SimpleGraph::path(3).unwrap();
        let n = 20_000;
        let series = birkhoff_average(&coin(), &k, &pattern, n, 4).unwrap();
        let target = series.target.unwrap();
        // Terms lie in [0, 1], so their standard deviation is at most 1/2.
        assert!((series.final_average() - target).abs() <= 4.0 * 0.5 / (n as f64).sqrt());
        assert!(series.partial_averages.iter().all(|a| (0.0..=1.0).contains(a)));
        assert!(!series.not_mixing);
    }

    #[test]
    fn birkhoff_markov_forgets_initial_distribution() {
        let n = 100_000;
        let band = 5.0 / (n as f64).sqrt();
        let stationary = birkhoff_average(&sticky(vec![0.5, 0.5]), &identity_kernel(), &SimpleGraph::edge(), n, 6).unwrap();
        assert_eq!(stationary.target, Some(0.5));
        assert!((stationary.final_average() - 0.5).abs() <= band);
        let cold = birkhoff_average(&sticky(vec![1.0, 0.0]), &identity_kernel(), &SimpleGraph::edge(), n, 6).unwrap();
        assert!((cold.target.unwrap() - 0.5).abs() < 1e-12);
        assert!((cold.final_average() - 0.5).abs() <= band);
        assert!((cold.final_average() - stationary.final_average()).abs() <= 10.0 / (n as f64).sqrt());
    }

    #[test]
    fn birkhoff_tail_stays_in_band() {
        let n = 100_000;
        let band = 5.0 / (n as f64).sqrt();
        let within = (0..100)
            .filter(|&r| {
                let s = birkhoff_average(&sticky(vec![0.5, 0.5]), &identity_kernel(), &SimpleGraph::edge(), n, 300 + r).unwrap();
                s.partial_averages[n - n / 10..].iter().all(|a| (a - 0.5).abs() <= band)
            })
            .count();
        assert!(within >= 95, "{within}");
    }

    #[test]
    fn birkhoff_flags_non_mixing() {
        let p = TransitionMatrix::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let flip = make_markov(StateSpace::indexed(2).unwrap(), p, Distribution::Finite(vec![0.5, 0.5])).unwrap();
        let series = birkhoff_average(&flip, &identity_kernel(), &SimpleGraph::edge(), 100, 1).unwrap();
        assert!(series.not_mixing);
        assert_eq!(series.target, Some(0.5));

        let stuck = make_markov(StateSpace::indexed(2).unwrap(), TransitionMatrix::identity(2), Distribution::Finite(vec![1.0, 0.0])).unwrap();
        let series = birkhoff_average(&stuck, &identity_kernel(), &SimpleGraph::edge(), 50, 1).unwrap();
        assert!(series.not_mixing);
        assert_eq!(series.target, Some(1.0));
        assert_eq!(series.final_average(), 1.0);
    }
}
