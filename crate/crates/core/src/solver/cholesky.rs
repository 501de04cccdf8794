//! Sparse Cholesky factorization with a minimum-degree ordering.
//!
//! The fill pattern is read off the elimination graph while the ordering
//! is computed, and the numeric factor is formed column by column
//! (left-looking).

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SparseCholesky {
    n: usize,
    /// new position -> original index
    perm: Vec<usize>,
    /// strictly-lower pattern of each column of L (new positions, ascending)
    pattern: Vec<Vec<usize>>,
    values: Vec<Vec<f64>>,
    diag: Vec<f64>,
}

impl SparseCholesky {
    /// Factors the symmetric positive definite matrix given by the lower
    /// triangle entries `(i, j, v)` with `i >= j`; duplicates are summed.
    pub fn factor(n: usize, lower: &[(usize, usize, f64)]) -> Result<Self> {
        // full adjacency with values keyed by original indices
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut diag_in = vec![0.0; n];
        for &(i, j, v) in lower {
            if i >= n || j >= n || i < j {
                return Err(Error::DimensionMismatch(format!("entry ({i},{j}) is not lower-triangular in {n}x{n}")));
            }
            if i == j {
                diag_in[i] += v;
            } else {
                cols[j].push((i, v));
                cols[i].push((j, v));
            }
        }
        let (perm, elim_nbrs) = minimum_degree(n, &cols);
        let mut iperm = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }
        let pattern: Vec<Vec<usize>> = perm
            .iter()
            .map(|&old| {
                let mut p: Vec<usize> = elim_nbrs[old].iter().map(|&u| iperm[u]).collect();
                p.sort_unstable();
                p
            })
            .collect();

        // rows_of[j] lists (k, position of j in pattern[k]) for k < j
        let mut rows_of: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        for (k, pat) in pattern.iter().enumerate() {
            for (pos, &i) in pat.iter().enumerate() {
                rows_of[i].push((k, pos));
            }
        }

        let mut values: Vec<Vec<f64>> = pattern.iter().map(|p| vec![0.0; p.len()]).collect();
        let mut diag = vec![0.0; n];
        let mut work = vec![0.0; n];
        for j in 0..n {
            let old = perm[j];
            work[j] = diag_in[old];
            for &(i_old, v) in &cols[old] {
                let i = iperm[i_old];
                if i > j {
                    work[i] += v;
                }
            }
            for &(k, pos) in &rows_of[j] {
                let ljk = values[k][pos];
                work[j] -= ljk * ljk;
                for p in (pos + 1)..pattern[k].len() {
                    work[pattern[k][p]] -= values[k][p] * ljk;
                }
            }
            let d = work[j];
            if d <= 0.0 || !d.is_finite() {
                return Err(Error::Solver(format!("matrix is not positive definite (pivot {d:e})")));
            }
            let d = d.sqrt();
            diag[j] = d;
            work[j] = 0.0;
            for (p, &i) in pattern[j].iter().enumerate() {
                values[j][p] = work[i] / d;
                work[i] = 0.0;
            }
        }
        Ok(Self { n, perm, pattern, values, diag })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.n + self.pattern.iter().map(|p| p.len()).sum::<usize>()
    }

    /// Solves `K x = rhs` in place.
    pub fn solve_in_place(&self, rhs: &mut [f64], scratch: &mut Vec<f64>) {
        scratch.clear();
        scratch.extend(self.perm.iter().map(|&o| rhs[o]));
        let z = scratch;
        for j in 0..self.n {
            let v = z[j] / self.diag[j];
            z[j] = v;
            for (p, &i) in self.pattern[j].iter().enumerate() {
                z[i] -= self.values[j][p] * v;
            }
        }
        for j in (0..self.n).rev() {
            let mut v = z[j];
            for (p, &i) in self.pattern[j].iter().enumerate() {
                v -= self.values[j][p] * z[i];
            }
            z[j] = v / self.diag[j];
        }
        for (j, &o) in self.perm.iter().enumerate() {
            rhs[o] = z[j];
        }
    }
}

/// Greedy minimum-degree elimination on the explicit elimination graph.
/// Returns the order and, for each node, its neighbours at elimination time.
fn minimum_degree(n: usize, cols: &[Vec<(usize, f64)>]) -> (Vec<usize>, Vec<Vec<usize>>) {
    let mut adj: Vec<HashSet<usize>> = cols.iter().map(|c| c.iter().map(|&(i, _)| i).collect()).collect();
    let mut eliminated = vec![false; n];
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> = (0..n).map(|v| Reverse((adj[v].len(), v))).collect();
    let mut order = Vec::with_capacity(n);
    let mut nbrs_at_elim: Vec<Vec<usize>> = vec![Vec::new(); n];
    while let Some(Reverse((deg, v))) = heap.pop() {
        if eliminated[v] || deg != adj[v].len() {
            continue;
        }
        eliminated[v] = true;
        order.push(v);
        let nbrs: Vec<usize> = adj[v].drain().collect();
        for &u in &nbrs {
            adj[u].remove(&v);
        }
        for (x, &u) in nbrs.iter().enumerate() {
            for &w in &nbrs[x + 1..] {
                adj[u].insert(w);
                adj[w].insert(u);
            }
        }
        for &u in &nbrs {
            heap.push(Reverse((adj[u].len(), u)));
        }
        nbrs_at_elim[v] = nbrs;
    }
    (order, nbrs_at_elim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};

    #[test]
    fn matches_dense_solve() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for n in [1usize, 2, 5, 20, 60] {
            // sparse B, K = I + B'B
            let mut b = DMatrix::<f64>::zeros(n + 3, n);
            for r in 0..n + 3 {
                for c in 0..n {
                    if rng.random::<f64>() < 0.15 {
                        b[(r, c)] = rng.random::<f64>() - 0.5;
                    }
                }
            }
            let k = DMatrix::identity(n, n) + b.transpose() * &b;
            let mut lower = Vec::new();
            for j in 0..n {
                for i in j..n {
                    if k[(i, j)] != 0.0 {
                        lower.push((i, j, k[(i, j)]));
                    }
                }
            }
            let f = SparseCholesky::factor(n, &lower).unwrap();
            let rhs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let mut x = rhs.clone();
            f.solve_in_place(&mut x, &mut Vec::new());
            let res = &k * DVector::from_vec(x) - DVector::from_vec(rhs);
            assert!(res.amax() < 1e-12, "n={n}: {}", res.amax());
        }
    }

    #[test]
    fn rejects_indefinite() {
        assert!(SparseCholesky::factor(2, &[(0, 0, 1.0), (1, 0, 2.0), (1, 1, 1.0)]).is_err());
    }
}
