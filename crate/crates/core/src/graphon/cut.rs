//! Cut norm of signed step kernels and block-permutation cut distance.

use itertools::Itertools;
use rand::Rng;
use serde::Serialize;

use super::{grid_spans, SignedStepKernel, StepGraphon};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::seed;

/// Exhaustive search up to this many blocks.
pub const MAX_EXACT_CUT_NORM_BLOCKS: usize = 10;
/// Random restarts of the alternating heuristic beyond the exact range.
pub const CUT_NORM_RESTARTS: usize = 50;
pub const DEFAULT_CUT_NORM_SEED: u64 = 0x6375_746e_6f72_6d00;
/// Largest common equal-measure grid for [`cut_distance`] (`8! = 40320` relabelings).
pub const MAX_CUT_DISTANCE_GRID: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutNorm<T> {
    pub value: T,
    /// 0-indexed blocks forming `S`.
    pub rows: Vec<usize>,
    /// 0-indexed blocks forming `T`.
    pub cols: Vec<usize>,
    /// False when the value is a heuristic lower bound.
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutDistance<T> {
    pub value: T,
    /// Block relabeling of the common grid applied to the second graphon (0-indexed images).
    pub permutation: Vec<usize>,
    /// Number of equal cells in the common grid.
    pub grid: usize,
    /// Always true: only block relabelings are searched, so this bounds the
    /// infimum over all measure preserving maps from above.
    pub restricted: bool,
}

/// `sup_{S,T} |sum_{a in S, b in T} pi_a pi_b U_ab|`, attained at unions of blocks.
pub fn cut_norm<T: Scalar>(u: &SignedStepKernel<T>) -> CutNorm<T> {
    cut_norm_seeded(u, DEFAULT_CUT_NORM_SEED)
}

/// As [`cut_norm`]; `seed` drives the restarts used when `k > 10`.
pub fn cut_norm_seeded<T: Scalar>(u: &SignedStepKernel<T>, seed: u64) -> CutNorm<T> {
    let weighted = weighted_matrix(u.block_measures(), |a, b| u.value(a, b));
    let k = u.k();
    if k <= MAX_EXACT_CUT_NORM_BLOCKS {
        exact(k, &weighted)
    } else {
        alternating(k, &weighted, seed)
    }
}

/// `pi_a pi_b U_ab`, row-major.
fn weighted_matrix<T: Scalar>(measures: &[T], value: impl Fn(usize, usize) -> T) -> Vec<T> {
    let k = measures.len();
    (0..k * k).map(|i| measures[i / k] * measures[i % k] * value(i / k, i % k)).collect()
}

/// For a fixed row set, the optimal column set takes every column whose sum
/// has the wanted sign, so enumerating `2^k` row sets is exhaustive.
fn exact<T: Scalar>(k: usize, m: &[T]) -> CutNorm<T> {
    let mut best = CutNorm { value: T::zero(), rows: Vec::new(), cols: Vec::new(), exact: true };
    let mut col_sums = vec![T::zero(); k];
    for mask in 1u32..(1 << k) {
        col_sums.iter_mut().for_each(|c| *c = T::zero());
        for a in (0..k).filter(|a| mask >> a & 1 == 1) {
            for b in 0..k {
                col_sums[b] = col_sums[b] + m[a * k + b];
            }
        }
        let pos = col_sums.iter().filter(|c| **c > T::zero()).fold(T::zero(), |acc, &c| acc + c);
        let neg = col_sums.iter().filter(|c| **c < T::zero()).fold(T::zero(), |acc, &c| acc - c);
        let (value, positive) = if neg > pos { (neg, false) } else { (pos, true) };
        if value > best.value {
            best.value = value;
            best.rows = (0..k).filter(|a| mask >> a & 1 == 1).collect();
            best.cols = (0..k)
                .filter(|&b| if positive { col_sums[b] > T::zero() } else { col_sums[b] < T::zero() })
                .collect();
        }
    }
    best
}

/// Alternating maximization: fix `S`, take the best `T`, then the best `S`
/// for that `T`, until the signed value stops improving.
fn alternating<T: Scalar>(k: usize, m: &[T], seed: u64) -> CutNorm<T> {
    let mut best = CutNorm { value: T::zero(), rows: Vec::new(), cols: Vec::new(), exact: false };
    for restart in 0..CUT_NORM_RESTARTS {
        let mut rng = seed::derived_stream(seed, "cut-norm", &[restart as u64]);
        let init: Vec<bool> = (0..k).map(|_| rng.random_bool(0.5)).collect();
        for sign in [T::one(), -T::one()] {
            let mut rows = init.clone();
            let mut current = T::zero();
            let mut cols;
            loop {
                let col_sums: Vec<T> = (0..k)
                    .map(|b| (0..k).filter(|&a| rows[a]).fold(T::zero(), |acc, a| acc + sign * m[a * k + b]))
                    .collect();
                cols = col_sums.iter().map(|c| *c > T::zero()).collect::<Vec<_>>();
                let row_sums: Vec<T> = (0..k)
                    .map(|a| (0..k).filter(|&b| cols[b]).fold(T::zero(), |acc, b| acc + sign * m[a * k + b]))
                    .collect();
                rows = row_sums.iter().map(|r| *r > T::zero()).collect();
                let value = row_sums.iter().filter(|r| **r > T::zero()).fold(T::zero(), |acc, &r| acc + r);
                if value <= current {
                    break;
                }
                current = value;
            }
            if current > best.value {
                best.value = current;
                best.rows = (0..k).filter(|&a| rows[a]).collect();
                best.cols = (0..k).filter(|&b| cols[b]).collect();
            }
        }
    }
    best
}

fn common_grid<T: Scalar>(w1: &StepGraphon<T>, w2: &StepGraphon<T>) -> Option<usize> {
    (1..=MAX_CUT_DISTANCE_GRID)
        .find(|&m| grid_spans(w1.block_measures(), m).is_some() && grid_spans(w2.block_measures(), m).is_some())
}

/// `min_phi ||w1 - w2 o phi||_cut` over relabelings `phi` of the smallest
/// common equal-measure grid (at most 8 cells).
pub fn cut_distance<T: Scalar>(w1: &StepGraphon<T>, w2: &StepGraphon<T>) -> Result<CutDistance<T>> {
    let m = common_grid(w1, w2).ok_or_else(|| {
        Error::UnsupportedSize(format!(
            "no common equal-measure refinement with at most {MAX_CUT_DISTANCE_GRID} cells"
        ))
    })?;
    let r1 = w1.refine(m)?;
    let r2 = w2.refine(m)?;
    let measures = r1.block_measures().to_vec();

    let mut best: Option<CutDistance<T>> = None;
    for phi in (0..m).permutations(m) {
        let weighted = weighted_matrix(&measures, |a, b| r1.value(a, b) - r2.value(phi[a], phi[b]));
        let value = exact(m, &weighted).value;
        if best.as_ref().is_none_or(|b| value < b.value) {
            let done = value.is_zero();
            best = Some(CutDistance { value, permutation: phi, grid: m, restricted: true });
            if done {
                break;
            }
        }
    }
    Ok(best.expect("at least the identity relabeling"))
}
