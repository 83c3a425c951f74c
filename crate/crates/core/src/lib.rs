//! State-driven dynamic graphon models.
//!
//! Nodes carry independent state processes (i.i.d. or finite Markov chains)
//! and, at every time step, each pair of nodes is joined with a probability
//! given by an edge kernel evaluated at their current states. The crate
//! samples such dynamic graphs and computes the objects used to study them:
//!
//! * exact homomorphism counts and densities between finite graphs,
//! * step graphons, their homomorphism densities (exact and Monte Carlo),
//!   cut norm, cut distance and Markov-kernel smoothing,
//! * the graphon induced by a state law and an edge kernel,
//! * recurrence counts and Birkhoff averages along state paths.
//!
//! Graphon routines are generic over [`Scalar`]; use [`Graphon`] for `f64`
//! work and [`ExactGraphon`] for rational arithmetic.
//!
//! All randomness flows from a single `u64` seed through [`seed::derive`],
//! so results are reproducible and independent of the rayon thread count.

pub mod dynamics;
pub mod edge_kernel;
pub mod ergodics;
pub mod error;
pub mod graph;
pub mod graphon;
pub mod homomorphism;
pub mod scalar;
pub mod seed;
pub mod state_process;

pub use dynamics::{
    conditional_prob, marginal_prob, marginal_prob_product, sample_graph, simulate_mixture_trajectory,
    simulate_trajectory, GraphTrajectory,
};
pub use edge_kernel::{
    check_symmetry, induced_graphon, mixture_density, sample_kernel, EdgeFunction, EdgeKernel, KernelConfig,
    KernelMixture,
};
pub use ergodics::{birkhoff_average, recurrence_count, shift, BirkhoffSeries, MatchMode, RecurrenceReport};
pub use error::{Error, ErrorKind, Result};
pub use graph::{SimpleGraph, VertexPermutation};
pub use graphon::{
    cut_distance, cut_norm, graphon_from_graph, hom_density_mc, hom_density_step, kernel_smooth, CutDistance,
    CutNorm, McEstimate, SignedStepKernel, StepGraphon, TransitionMatrix,
};
pub use homomorphism::{hom_count, hom_density_graphs, HomCount};
pub use scalar::Scalar;
pub use state_process::{
    make_iid, make_markov, sample_states, stationary_dist, Distribution, ProcessConfig, State, StateProcess,
    StateSpace, StateTrajectory,
};

/// Exact rational scalar.
pub type Rational = num_rational::Ratio<i64>;

pub type Graphon = StepGraphon<f64>;
pub type ExactGraphon = StepGraphon<Rational>;
pub type SignedKernel = SignedStepKernel<f64>;
pub type ExactSignedKernel = SignedStepKernel<Rational>;
pub type Transition = TransitionMatrix<f64>;
pub type ExactTransition = TransitionMatrix<Rational>;
