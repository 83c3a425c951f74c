use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::StepGraphon;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Row-stochastic `k x k` matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "Vec<Vec<T>>",
    into = "Vec<Vec<T>>",
    bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>")
)]
pub struct TransitionMatrix<T> {
    k: usize,
    p: Vec<T>,
}

impl<T: Scalar> TryFrom<Vec<Vec<T>>> for TransitionMatrix<T> {
    type Error = Error;

    fn try_from(rows: Vec<Vec<T>>) -> Result<Self> {
        Self::new(rows)
    }
}

impl<T: Scalar> From<TransitionMatrix<T>> for Vec<Vec<T>> {
    fn from(m: TransitionMatrix<T>) -> Self {
        m.rows()
    }
}

impl<T: Scalar> TransitionMatrix<T> {
    pub fn new(rows: Vec<Vec<T>>) -> Result<Self> {
        let k = rows.len();
        if k == 0 {
            return Err(Error::InvalidTransition("matrix is empty".into()));
        }
        let mut p = Vec::with_capacity(k * k);
        for (a, row) in rows.into_iter().enumerate() {
            if row.len() != k {
                return Err(Error::DimensionMismatch { what: "transition matrix columns", expected: k, found: row.len() });
            }
            if let Some(v) = row.iter().find(|v| **v < T::zero()) {
                return Err(Error::InvalidTransition(format!("row {a} has negative entry {v}")));
            }
            let sum = row.iter().fold(T::zero(), |acc, &v| acc + v);
            if !sum.approx_eq(T::one()) {
                return Err(Error::InvalidTransition(format!("row {a} sums to {sum}, not 1")));
            }
            p.extend(row);
        }
        Ok(TransitionMatrix { k, p })
    }

    pub fn identity(k: usize) -> Self {
        let p = (0..k * k).map(|i| if i / k == i % k { T::one() } else { T::zero() }).collect();
        TransitionMatrix { k, p }
    }

    pub fn uniform(k: usize) -> Self {
        TransitionMatrix { k, p: vec![T::one() / T::from_count(k); k * k] }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, from: usize, to: usize) -> T {
        self.p[from * self.k + to]
    }

    pub fn row(&self, from: usize) -> &[T] {
        &self.p[from * self.k..(from + 1) * self.k]
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        self.p.chunks(self.k).map(<[T]>::to_vec).collect()
    }

    pub fn is_doubly_stochastic(&self) -> bool {
        (0..self.k).all(|b| (0..self.k).fold(T::zero(), |acc, a| acc + self.get(a, b)).approx_eq(T::one()))
    }

    /// One step of the chain: `dist * P`.
    pub fn propagate(&self, dist: &[T]) -> Vec<T> {
        (0..self.k)
            .map(|b| dist.iter().enumerate().fold(T::zero(), |acc, (a, &m)| acc + m * self.get(a, b)))
            .collect()
    }

    fn reachable_from(&self, start: usize, forward: bool) -> Vec<bool> {
        let mut seen = vec![false; self.k];
        seen[start] = true;
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for w in 0..self.k {
                let positive = if forward { self.get(v, w) } else { self.get(w, v) } > T::zero();
                if positive && !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen
    }

    /// States that are not mutually reachable with state 0 (empty iff irreducible).
    pub fn unreachable_states(&self) -> Vec<usize> {
        let fwd = self.reachable_from(0, true);
        let bwd = self.reachable_from(0, false);
        (0..self.k).filter(|&s| !(fwd[s] && bwd[s])).collect()
    }

    pub fn is_irreducible(&self) -> bool {
        self.unreachable_states().is_empty()
    }

    /// Period of an irreducible chain: gcd of `level(u) + 1 - level(v)` over
    /// positive transitions `u -> v`, with BFS levels from state 0.
    pub fn period(&self) -> Option<usize> {
        if !self.is_irreducible() {
            return None;
        }
        let mut level = vec![usize::MAX; self.k];
        level[0] = 0;
        let mut queue = std::collections::VecDeque::from([0usize]);
        while let Some(v) = queue.pop_front() {
            for w in 0..self.k {
                if self.get(v, w) > T::zero() && level[w] == usize::MAX {
                    level[w] = level[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        let mut g = 0usize;
        for u in 0..self.k {
            for v in 0..self.k {
                if self.get(u, v) > T::zero() {
                    g = gcd(g, (level[u] + 1).abs_diff(level[v]));
                }
            }
        }
        Some(g)
    }

    pub fn is_aperiodic(&self) -> bool {
        self.period() == Some(1)
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 { a } else { gcd(b, a % b) }
}

impl<T: Scalar + Float> TransitionMatrix<T> {
    /// Sinkhorn-Knopp balancing of a strictly positive matrix into a doubly
    /// stochastic one. Stops once every column sum is within `tol` of one.
    pub fn sinkhorn(mut m: Vec<Vec<T>>, tol: T, max_iter: usize) -> Result<Self> {
        let k = m.len();
        if m.iter().flatten().any(|&v| v <= T::zero()) {
            return Err(Error::InvalidTransition("sinkhorn needs strictly positive entries".into()));
        }
        for _ in 0..max_iter {
            for row in m.iter_mut() {
                let s = row.iter().fold(T::zero(), |acc, &v| acc + v);
                row.iter_mut().for_each(|v| *v = *v / s);
            }
            let mut worst = T::zero();
            for b in 0..k {
                let s = m.iter().fold(T::zero(), |acc, row| acc + row[b]);
                worst = worst.max((s - T::one()).abs());
            }
            if worst <= tol {
                return Self::new(m);
            }
            for b in 0..k {
                let s = m.iter().fold(T::zero(), |acc, row| acc + row[b]);
                m.iter_mut().for_each(|row| row[b] = row[b] / s);
            }
        }
        Err(Error::InvalidTransition(format!("sinkhorn did not converge in {max_iter} iterations")))
    }
}

/// One smoothing step `W' = P^T W P` on equal blocks.
///
/// Discretizes `w'(x, y) = int w(s, t) p(s, dx) p(t, dy)`. Row sums of one
/// keep the edge density fixed; column sums of one keep `W'` inside `[0, 1]`,
/// so `p` must be doubly stochastic.
pub fn kernel_smooth<T: Scalar>(w: &StepGraphon<T>, p: &TransitionMatrix<T>) -> Result<StepGraphon<T>> {
    let k = w.k();
    if p.k() != k {
        return Err(Error::DimensionMismatch { what: "transition matrix size", expected: k, found: p.k() });
    }
    if !w.has_equal_blocks() {
        return Err(Error::InvalidGraphon("kernel smoothing needs equal-measure blocks".into()));
    }
    if !p.is_doubly_stochastic() {
        return Err(Error::InvalidTransition("kernel smoothing needs a doubly stochastic matrix".into()));
    }
    // (W P)_{s y}
    let wp: Vec<T> = (0..k)
        .flat_map(|s| (0..k).map(move |y| (s, y)))
        .map(|(s, y)| (0..k).fold(T::zero(), |acc, t| acc + w.value(s, t) * p.get(t, y)))
        .collect();
    let mut out = vec![vec![T::zero(); k]; k];
    for x in 0..k {
        for y in x..k {
            let v = (0..k).fold(T::zero(), |acc, s| acc + p.get(s, x) * wp[s * k + y]);
            // Round-off can push a sum of convex weights a hair outside [0, 1].
            let v = if v > T::one() { T::one() } else if v < T::zero() { T::zero() } else { v };
            out[x][y] = v;
            out[y][x] = v;
        }
    }
    StepGraphon::new(w.block_measures().to_vec(), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;
    use rand::Rng;

    #[test]
    fn validation() {
        assert!(TransitionMatrix::new(vec![vec![0.5, 0.4], vec![0.5, 0.5]]).is_err());
        assert!(TransitionMatrix::new(vec![vec![1.5, -0.5], vec![0.5, 0.5]]).is_err());
        assert!(TransitionMatrix::new(vec![vec![1.0, 0.0]]).is_err());
        let p = TransitionMatrix::new(vec![vec![0.5, 0.5], vec![0.25, 0.75]]).unwrap();
        assert!(!p.is_doubly_stochastic());
        assert!(TransitionMatrix::<f64>::uniform(3).is_doubly_stochastic());
    }

    #[test]
    fn structure_checks() {
        let flip = TransitionMatrix::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(flip.period(), Some(2));
        let lazy = TransitionMatrix::new(vec![vec![0.9, 0.1], vec![0.1, 0.9]]).unwrap();
        assert_eq!(lazy.period(), Some(1));
        assert_eq!(TransitionMatrix::<f64>::identity(2).unreachable_states(), vec![1]);
        assert_eq!(TransitionMatrix::<f64>::identity(1).period(), Some(1));
        let cyc3 = TransitionMatrix::new(vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]]).unwrap();
        assert_eq!(cyc3.period(), Some(3));
        let absorbing = TransitionMatrix::new(vec![vec![0.5, 0.5], vec![0.0, 1.0]]).unwrap();
        assert_eq!(absorbing.unreachable_states(), vec![1]);
    }

    #[test]
    fn smoothing_by_identity_is_a_no_op() {
        let w = StepGraphon::equal_blocks(vec![vec![0.8, 0.2], vec![0.2, 0.8]]).unwrap();
        assert_eq!(kernel_smooth(&w, &TransitionMatrix::identity(2)).unwrap(), w);
    }

    #[test]
    fn uniform_smoothing_flattens_to_edge_density() {
        let w = StepGraphon::equal_blocks(vec![
            vec![0.9, 0.1, 0.4],
            vec![0.1, 0.0, 0.7],
            vec![0.4, 0.7, 0.2],
        ])
        .unwrap();
        let density = w.edge_density();
        let flat = kernel_smooth(&w, &TransitionMatrix::uniform(3)).unwrap();
        for v in flat.values_matrix().into_iter().flatten() {
            assert!((v - density).abs() < 1e-10);
        }
        // Exact on rationals.
        let wq = w.map_scalar(|v| Ratio::<i64>::approximate_float(v).unwrap()).unwrap();
        let flat_q = kernel_smooth(&wq, &TransitionMatrix::uniform(3)).unwrap();
        assert!(flat_q.values_matrix().into_iter().flatten().all(|v| v == wq.edge_density()));
    }

    #[test]
    fn sinkhorn_smoothing_keeps_diagonal_density() {
        let mut rng = crate::seed::stream(5);
        let raw: Vec<Vec<f64>> = (0..2).map(|_| (0..2).map(|_| rng.random_range(0.05..1.0)).collect()).collect();
        let p = TransitionMatrix::sinkhorn(raw, 1e-14, 10_000).unwrap();
        let w = StepGraphon::equal_blocks(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let smoothed = kernel_smooth(&w, &p).unwrap();
        assert!((smoothed.edge_density() - 0.5).abs() <= 1e-10);
    }

    #[test]
    fn row_stochastic_only_is_rejected() {
        let w = StepGraphon::equal_blocks(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let p = TransitionMatrix::new(vec![vec![0.5, 0.5], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(kernel_smooth(&w, &p), Err(Error::InvalidTransition(_))));
        let uneven = StepGraphon::new(vec![0.25, 0.75], vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(kernel_smooth(&uneven, &TransitionMatrix::identity(2)).is_err());
    }
}
