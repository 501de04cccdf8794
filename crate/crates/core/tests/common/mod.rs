//! Independent oracles shared by the integration tests. Nothing here calls
//! into the numerical code under test.
#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::BTreeMap;

use nalgebra::DMatrix;
use thetabody::conic::ConicProblem;
use thetabody::groebner::{coeff_to_f64, Polynomial};
use thetabody::solver::ConicSolution;

// ---------------------------------------------------------------------------
// KKT residuals recomputed from the raw problem data

#[derive(Debug, Clone, Copy)]
pub struct Kkt {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
    /// largest violation of `s ∈ K` or `y ∈ K*`
    pub cone: f64,
}

impl Kkt {
    pub fn worst(&self) -> f64 {
        self.primal.max(self.dual).max(self.gap).max(self.cone)
    }
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Symmetric matrix from a lower-triangle column-major vector whose
/// off-diagonal entries carry a factor `√2`.
pub fn unpack_scaled(n: usize, v: &[f64]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    let mut k = 0;
    for j in 0..n {
        for i in j..n {
            let x = if i == j { v[k] } else { v[k] / 2f64.sqrt() };
            m[(i, j)] = x;
            m[(j, i)] = x;
            k += 1;
        }
    }
    m
}

fn cone_violation(p: &ConicProblem, v: &[f64], dual: bool) -> f64 {
    let mut worst = 0.0f64;
    let z = p.cones.zero;
    if !dual {
        for &x in &v[..z] {
            worst = worst.max(x.abs());
        }
    }
    for &x in &v[z..z + p.cones.nonneg] {
        worst = worst.max(-x);
    }
    let mut off = z + p.cones.nonneg;
    for &n in &p.cones.psd {
        let len = n * (n + 1) / 2;
        let m = unpack_scaled(n, &v[off..off + len]);
        let scale = 1.0 + m.abs().max();
        worst = worst.max(-m.symmetric_eigenvalues().min() / scale);
        off += len;
    }
    worst
}

pub fn kkt(p: &ConicProblem, sol: &ConicSolution) -> Kkt {
    let (m, n) = (p.b.len(), p.c.len());
    let mut r: Vec<f64> = (0..m).map(|i| sol.s[i] - p.b[i]).collect();
    let mut d = p.c.clone();
    for (i, j, v) in p.a.triplets() {
        r[i] += v * sol.x[j];
        d[j] += v * sol.y[i];
    }
    let cx: f64 = p.c.iter().zip(&sol.x).map(|(a, b)| a * b).sum();
    let by: f64 = p.b.iter().zip(&sol.y).map(|(a, b)| a * b).sum();
    assert_eq!(d.len(), n);
    Kkt {
        primal: l2(&r) / (1.0 + l2(&p.b)),
        dual: l2(&d) / (1.0 + l2(&p.c)),
        gap: (cx + by).abs() / (1.0 + cx.abs() + by.abs()),
        cone: cone_violation(p, &sol.s, false).max(cone_violation(p, &sol.y, true)),
    }
}

// ---------------------------------------------------------------------------
// Singular values by one-sided Jacobi rotations

pub fn singular_values(a: &DMatrix<f64>) -> Vec<f64> {
    let mut u = if a.nrows() >= a.ncols() { a.clone() } else { a.transpose() };
    let n = u.ncols();
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = u.column(p).iter().map(|x| x * x).sum();
                let beta: f64 = u.column(q).iter().map(|x| x * x).sum();
                let gamma: f64 = u.column(p).iter().zip(u.column(q).iter()).map(|(x, y)| x * y).sum();
                if gamma == 0.0 {
                    continue;
                }
                off = off.max(gamma.abs() / (alpha * beta).sqrt().max(1e-300));
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..u.nrows() {
                    let (x, y) = (u[(i, p)], u[(i, q)]);
                    u[(i, p)] = c * x - s * y;
                    u[(i, q)] = s * x + c * y;
                }
            }
        }
        if off < 1e-15 {
            break;
        }
    }
    let mut sv: Vec<f64> = (0..n).map(|j| u.column(j).norm()).collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sv
}

// ---------------------------------------------------------------------------
// Dense two-phase simplex: min c'x s.t. A x = b, x >= 0 (Bland's rule)

pub fn lp_min(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Option<f64> {
    let m = a.len();
    let n = c.len();
    // tableau columns: n originals, m artificials, rhs
    let w = n + m + 1;
    let mut t = vec![vec![0.0; w]; m];
    for i in 0..m {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i][j] = sign * a[i][j];
        }
        t[i][n + i] = 1.0;
        t[i][w - 1] = sign * b[i];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    let pivot = |t: &mut Vec<Vec<f64>>, basis: &mut Vec<usize>, r: usize, col: usize| {
        let pv = t[r][col];
        for x in t[r].iter_mut() {
            *x /= pv;
        }
        for i in 0..t.len() {
            if i != r && t[i][col] != 0.0 {
                let f = t[i][col];
                for j in 0..w {
                    t[i][j] -= f * t[r][j];
                }
            }
        }
        basis[r] = col;
    };
    let run = |t: &mut Vec<Vec<f64>>, basis: &mut Vec<usize>, cost: &[f64], allowed: usize| -> bool {
        for _ in 0..10_000 {
            let reduced = |j: usize, t: &Vec<Vec<f64>>, basis: &Vec<usize>| -> f64 {
                cost[j] - (0..m).map(|i| cost[basis[i]] * t[i][j]).sum::<f64>()
            };
            let Some(col) = (0..allowed).find(|&j| !basis.contains(&j) && reduced(j, t, basis) < -1e-10) else {
                return true;
            };
            let mut best: Option<(f64, usize)> = None;
            for i in 0..m {
                if t[i][col] > 1e-12 {
                    let ratio = t[i][w - 1] / t[i][col];
                    match best {
                        Some((r, bi)) if ratio > r + 1e-12 || (ratio >= r - 1e-12 && basis[i] > basis[bi]) => {}
                        _ => best = Some((ratio, i)),
                    }
                }
            }
            let Some((_, r)) = best else { return false };
            pivot(t, basis, r, col);
        }
        false
    };
    let mut phase1 = vec![0.0; n + m];
    for x in &mut phase1[n..] {
        *x = 1.0;
    }
    run(&mut t, &mut basis, &phase1, n + m);
    let infeas: f64 = (0..m).filter(|&i| basis[i] >= n).map(|i| t[i][w - 1]).sum();
    if infeas > 1e-8 {
        return None;
    }
    // drive remaining artificials out where possible
    for r in 0..m {
        if basis[r] >= n {
            if let Some(col) = (0..n).find(|&j| t[r][j].abs() > 1e-10) {
                pivot(&mut t, &mut basis, r, col);
            }
        }
    }
    let mut cost = c.to_vec();
    cost.extend(std::iter::repeat(1e6).take(m));
    if !run(&mut t, &mut basis, &cost, n) {
        return None;
    }
    Some((0..m).filter(|&i| basis[i] < n).map(|i| c[basis[i]] * t[i][w - 1]).sum())
}

// ---------------------------------------------------------------------------
// Multi-indices and the rank-one generators written out from their
// definitions, with plain integer polynomial division under grevlex

/// All 1-based multi-indices of `dims` in lexicographic order.
pub fn multi_indices(dims: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for &n in dims {
        out = out.into_iter().flat_map(|p| (1..=n).map(move |c| [p.clone(), vec![c]].concat())).collect();
    }
    out
}

pub fn offset(dims: &[usize], a: &[usize]) -> usize {
    a.iter().zip(dims).fold(0, |acc, (&c, &n)| acc * n + c - 1)
}

pub type Exps = Vec<u32>;

/// `Ordering::Greater` when `a` is larger in grevlex with `x_0 > x_1 > ...`.
pub fn grevlex(a: &Exps, b: &Exps) -> Ordering {
    let (da, db): (u32, u32) = (a.iter().sum(), b.iter().sum());
    if da != db {
        return da.cmp(&db);
    }
    for i in (0..a.len()).rev() {
        if a[i] != b[i] {
            // the rightmost nonzero entry of a - b is negative => a > b
            return if a[i] < b[i] { Ordering::Greater } else { Ordering::Less };
        }
    }
    Ordering::Equal
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IntPoly(pub BTreeMap<Exps, i64>);

impl IntPoly {
    pub fn add_term(&mut self, e: Exps, c: i64) {
        let v = self.0.entry(e.clone()).or_insert(0);
        *v += c;
        if *v == 0 {
            self.0.remove(&e);
        }
    }

    pub fn leading(&self) -> Option<(&Exps, i64)> {
        self.0.iter().max_by(|a, b| grevlex(a.0, b.0)).map(|(e, c)| (e, *c))
    }

    pub fn from_library(p: &Polynomial, nvars: usize) -> Self {
        let mut out = IntPoly::default();
        for (m, c) in p.terms() {
            let mut e = vec![0; nvars];
            for (v, k) in m.exponents() {
                e[v] = k;
            }
            let cf = coeff_to_f64(c);
            assert_eq!(cf, cf.round(), "non-integer coefficient");
            out.add_term(e, cf as i64);
        }
        out
    }
}

fn unit(nvars: usize, vars: &[usize]) -> Exps {
    let mut e = vec![0; nvars];
    for &v in vars {
        e[v] += 1;
    }
    e
}

fn binomial(nvars: usize, lhs: [usize; 2], rhs: [usize; 2], rhs_coef: i64) -> IntPoly {
    let mut p = IntPoly::default();
    p.add_term(unit(nvars, &lhs), 1);
    if rhs_coef != 0 {
        p.add_term(unit(nvars, &rhs), -rhs_coef);
    }
    p
}

/// `{x_a x_b - x_{a∧b} x_{a∨b} : a < b, a_i > b_i for some i}`.
pub fn g0_generators(dims: &[usize]) -> Vec<IntPoly> {
    let idx = multi_indices(dims);
    let n = idx.len();
    let mut out = vec![];
    for (ia, a) in idx.iter().enumerate() {
        for b in &idx[ia + 1..] {
            if a.iter().zip(b).any(|(x, y)| x > y) {
                let lo: Vec<usize> = a.iter().zip(b).map(|(x, y)| *x.min(y)).collect();
                let hi: Vec<usize> = a.iter().zip(b).map(|(x, y)| *x.max(y)).collect();
                out.push(binomial(n, [offset(dims, a), offset(dims, b)], [offset(dims, &lo), offset(dims, &hi)], 1));
            }
        }
    }
    out
}

/// `{x_a^2 - 1} ∪ {x_a x_b - x_{a∧̄b} x_{a∨̄b} : a < b, a_i > b_i or a_i = b_i < n_i for some i}`.
pub fn ginf_generators(dims: &[usize]) -> Vec<IntPoly> {
    let idx = multi_indices(dims);
    let n = idx.len();
    let mut out = vec![];
    for a in &idx {
        let mut p = IntPoly::default();
        p.add_term(unit(n, &[offset(dims, a), offset(dims, a)]), 1);
        p.add_term(vec![0; n], -1);
        out.push(p);
    }
    for (ia, a) in idx.iter().enumerate() {
        for b in &idx[ia + 1..] {
            let qualifies = (0..dims.len()).any(|i| a[i] > b[i] || (a[i] == b[i] && a[i] < dims[i]));
            if !qualifies {
                continue;
            }
            let (mut lo, mut hi) = (vec![0; dims.len()], vec![0; dims.len()]);
            for i in 0..dims.len() {
                if a[i] == b[i] {
                    lo[i] = dims[i];
                    hi[i] = dims[i];
                } else {
                    lo[i] = a[i].min(b[i]);
                    hi[i] = a[i].max(b[i]);
                }
            }
            out.push(binomial(n, [offset(dims, a), offset(dims, b)], [offset(dims, &lo), offset(dims, &hi)], 1));
        }
    }
    out
}

fn divides(a: &Exps, b: &Exps) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

/// Remainder of `f` on division by monic `gens`, always rewriting the
/// grevlex-largest reducible term.
pub fn naive_reduce(f: &IntPoly, gens: &[IntPoly]) -> IntPoly {
    let leads: Vec<(Exps, i64)> = gens.iter().map(|g| {
        let (e, c) = g.leading().expect("nonzero generator");
        (e.clone(), c)
    }).collect();
    assert!(leads.iter().all(|l| l.1 == 1), "generators must be monic");
    let mut f = f.clone();
    loop {
        let target = f
            .0
            .iter()
            .filter(|(e, _)| leads.iter().any(|l| divides(&l.0, e)))
            .max_by(|a, b| grevlex(a.0, b.0))
            .map(|(e, c)| (e.clone(), *c));
        let Some((e, c)) = target else { return f };
        let gi = leads.iter().position(|l| divides(&l.0, &e)).unwrap();
        let q: Exps = e.iter().zip(&leads[gi].0).map(|(x, y)| x - y).collect();
        for (ge, gc) in &gens[gi].0 {
            let prod: Exps = ge.iter().zip(&q).map(|(x, y)| x + y).collect();
            f.add_term(prod, -c * gc);
        }
    }
}

// ---------------------------------------------------------------------------
// Small helpers

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}
