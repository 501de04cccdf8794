//! Type-II Anderson acceleration for a fixed-point map `z -> T(z)`.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

/// Tikhonov weight relative to the trace of the difference Gram matrix.
/// Much smaller values let near-collinear histories produce huge
/// coefficients, and the iteration can stall while still passing the
/// safeguard.
const REGULARIZATION: f64 = 1e-6;

#[derive(Debug, Clone)]
pub(crate) struct Anderson {
    memory: usize,
    dz: VecDeque<Vec<f64>>,
    df: VecDeque<Vec<f64>>,
    prev: Option<(Vec<f64>, Vec<f64>)>,
}

impl Anderson {
    pub(crate) fn new(memory: usize) -> Self {
        Self { memory, dz: VecDeque::new(), df: VecDeque::new(), prev: None }
    }

    pub(crate) fn reset(&mut self) {
        self.dz.clear();
        self.df.clear();
        self.prev = None;
    }

    /// Records the point `z` with residual `f = T(z) - z` and returns the
    /// extrapolated next point, or `None` while there is no history.
    pub(crate) fn step(&mut self, z: &[f64], f: &[f64]) -> Option<Vec<f64>> {
        if self.memory == 0 {
            return None;
        }
        if let Some((zp, fp)) = self.prev.take() {
            self.dz.push_back(z.iter().zip(&zp).map(|(a, b)| a - b).collect());
            self.df.push_back(f.iter().zip(&fp).map(|(a, b)| a - b).collect());
            if self.dz.len() > self.memory {
                self.dz.pop_front();
                self.df.pop_front();
            }
        }
        self.prev = Some((z.to_vec(), f.to_vec()));
        let k = self.df.len();
        if k == 0 {
            return None;
        }
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let mut gram = DMatrix::zeros(k, k);
        let mut rhs = DVector::zeros(k);
        for i in 0..k {
            for j in 0..=i {
                let v = dot(&self.df[i], &self.df[j]);
                gram[(i, j)] = v;
                gram[(j, i)] = v;
            }
            rhs[i] = dot(&self.df[i], f);
        }
        let reg = REGULARIZATION * (0..k).map(|i| gram[(i, i)]).sum::<f64>().max(1e-300);
        for i in 0..k {
            gram[(i, i)] += reg;
        }
        let gamma = gram.cholesky()?.solve(&rhs);
        if gamma.iter().any(|g| !g.is_finite()) {
            return None;
        }
        let mut out: Vec<f64> = z.iter().zip(f).map(|(a, b)| a + b).collect();
        for i in 0..k {
            let g = gamma[i];
            for ((o, dz), df) in out.iter_mut().zip(&self.dz[i]).zip(&self.df[i]) {
                *o -= g * (dz + df);
            }
        }
        Some(out)
    }
}
