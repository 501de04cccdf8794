//! Combinatorial normal forms of monomials modulo `G_0` and `G_∞`, without
//! running the division algorithm.

use super::monomial::Monomial;
use crate::tensor::Shape;

/// Normal form modulo `G_0`: sort each coordinate's multiset of values and
/// redistribute them so the j-th factor takes the j-th smallest values.
pub fn normal_form_g0(m: &Monomial, shape: &Shape) -> Monomial {
    let factors: Vec<_> = m.variables().into_iter().map(|v| shape.index(v)).collect();
    let k = factors.len();
    let d = shape.order();
    let mut columns: Vec<Vec<usize>> = (0..d).map(|i| factors.iter().map(|a| a.0[i]).collect()).collect();
    for col in &mut columns {
        col.sort_unstable();
    }
    Monomial::from_vars((0..k).map(|j| {
        let coords: Vec<usize> = (0..d).map(|i| columns[i][j]).collect();
        shape.offset(&coords.into())
    }))
}

/// Normal form modulo `G_∞` via occurrence counts and parities per mode.
///
/// For mode `j`, `s_{i,j}` counts factors whose j-th coordinate is `i`; the
/// odd parts `S_j` survive. With `l = k - min_j Σ_i (even part of s_{i,j})`
/// factors remaining, the r-th surviving index takes the r-th smallest
/// element of `S_j`, padded with `n_j` once `S_j` is exhausted.
pub fn normal_form_ginf(m: &Monomial, shape: &Shape) -> Monomial {
    let factors: Vec<_> = m.variables().into_iter().map(|v| shape.index(v)).collect();
    let k = factors.len();
    let dims = shape.dims();
    let mut survivors: Vec<Vec<usize>> = Vec::with_capacity(dims.len());
    let mut min_even = usize::MAX;
    for (j, &nj) in dims.iter().enumerate() {
        let mut counts = vec![0usize; nj + 1];
        for a in &factors {
            counts[a.0[j]] += 1;
        }
        let even: usize = counts.iter().map(|&s| s - s % 2).sum();
        min_even = min_even.min(even);
        survivors.push((1..=nj).filter(|&i| counts[i] % 2 == 1).collect());
    }
    let l = k - min_even.min(k);
    Monomial::from_vars((0..l).map(|r| {
        let coords: Vec<usize> = survivors
            .iter()
            .zip(dims)
            .map(|(s, &nj)| s.get(r).copied().unwrap_or(nj))
            .collect();
        shape.offset(&coords.into())
    }))
}
