use std::cmp::Ordering;
use std::fmt;

use crate::tensor::{MultiIndex, Shape};

/// Sparse exponent vector over the variables `x_a`, keyed by the 0-based
/// row-major offset of `a`. Offsets ascend in the variable order
/// `x_{1...1} > x_{1...12} > ... > x_{n_1...n_d}`.
///
/// `Ord` is the graded reverse lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Monomial {
    /// Sorted by variable, no zero exponents.
    exps: Vec<(u32, u32)>,
    degree: u32,
}

impl Monomial {
    pub fn one() -> Self {
        Self::default()
    }

    pub fn var(v: usize) -> Self {
        Self { exps: vec![(v as u32, 1)], degree: 1 }
    }

    pub fn var_pow(v: usize, e: u32) -> Self {
        if e == 0 {
            return Self::one();
        }
        Self { exps: vec![(v as u32, e)], degree: e }
    }

    /// Builds a monomial from `(variable, exponent)` pairs in any order;
    /// repeated variables accumulate.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, u32)>) -> Self {
        let mut exps: Vec<(u32, u32)> = pairs.into_iter().filter(|&(_, e)| e > 0).map(|(v, e)| (v as u32, e)).collect();
        exps.sort_unstable();
        let mut merged: Vec<(u32, u32)> = Vec::with_capacity(exps.len());
        for (v, e) in exps {
            match merged.last_mut() {
                Some(last) if last.0 == v => last.1 += e,
                _ => merged.push((v, e)),
            }
        }
        let degree = merged.iter().map(|&(_, e)| e).sum();
        Self { exps: merged, degree }
    }

    /// Product of the given variables, with repetition.
    pub fn from_vars(vars: impl IntoIterator<Item = usize>) -> Self {
        Self::from_pairs(vars.into_iter().map(|v| (v, 1)))
    }

    pub fn from_indices(shape: &Shape, idx: &[MultiIndex]) -> Self {
        Self::from_vars(idx.iter().map(|a| shape.offset(a)))
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn is_one(&self) -> bool {
        self.exps.is_empty()
    }

    /// `(variable, exponent)` pairs in ascending variable order.
    pub fn exponents(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.exps.iter().map(|&(v, e)| (v as usize, e))
    }

    pub fn exponent(&self, v: usize) -> u32 {
        self.exps
            .binary_search_by_key(&(v as u32), |&(w, _)| w)
            .map(|i| self.exps[i].1)
            .unwrap_or(0)
    }

    /// Variables with multiplicity, ascending.
    pub fn variables(&self) -> Vec<usize> {
        self.exps.iter().flat_map(|&(v, e)| std::iter::repeat_n(v as usize, e as usize)).collect()
    }

    pub fn max_var(&self) -> Option<usize> {
        self.exps.last().map(|&(v, _)| v as usize)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut exps = Vec::with_capacity(self.exps.len() + other.exps.len());
        let (mut i, mut j) = (0, 0);
        while i < self.exps.len() && j < other.exps.len() {
            let (a, b) = (self.exps[i], other.exps[j]);
            match a.0.cmp(&b.0) {
                Ordering::Less => {
                    exps.push(a);
                    i += 1;
                }
                Ordering::Greater => {
                    exps.push(b);
                    j += 1;
                }
                Ordering::Equal => {
                    exps.push((a.0, a.1 + b.1));
                    i += 1;
                    j += 1;
                }
            }
        }
        exps.extend_from_slice(&self.exps[i..]);
        exps.extend_from_slice(&other.exps[j..]);
        Monomial { exps, degree: self.degree + other.degree }
    }

    pub fn divides(&self, other: &Monomial) -> bool {
        if self.degree > other.degree {
            return false;
        }
        self.exps.iter().all(|&(v, e)| other.exponent(v as usize) >= e)
    }

    /// `other / self`, if `self` divides `other`.
    pub fn quotient_of(&self, other: &Monomial) -> Option<Monomial> {
        if !self.divides(other) {
            return None;
        }
        Some(Monomial::from_pairs(other.exponents().map(|(v, e)| (v, e - self.exponent(v)))))
    }

    pub fn lcm(&self, other: &Monomial) -> Monomial {
        let mut pairs: Vec<(usize, u32)> = self.exponents().collect();
        for (v, e) in other.exponents() {
            match pairs.iter_mut().find(|p| p.0 == v) {
                Some(p) => p.1 = p.1.max(e),
                None => pairs.push((v, e)),
            }
        }
        Monomial::from_pairs(pairs)
    }

    pub fn is_coprime(&self, other: &Monomial) -> bool {
        self.exps.iter().all(|&(v, _)| other.exponent(v as usize) == 0)
    }

    /// All divisors of total degree exactly `d`.
    pub(crate) fn divisors_of_degree(&self, d: u32) -> Vec<Monomial> {
        let mut out = Vec::new();
        let mut cur: Vec<(u32, u32)> = Vec::new();
        fn rec(exps: &[(u32, u32)], pos: usize, left: u32, cur: &mut Vec<(u32, u32)>, out: &mut Vec<Monomial>, d: u32) {
            if left == 0 {
                out.push(Monomial { exps: cur.clone(), degree: d });
                return;
            }
            if pos == exps.len() {
                return;
            }
            let (v, e) = exps[pos];
            for take in (0..=e.min(left)).rev() {
                if take > 0 {
                    cur.push((v, take));
                }
                rec(exps, pos + 1, left - take, cur, out, d);
                if take > 0 {
                    cur.pop();
                }
            }
        }
        if d <= self.degree {
            rec(&self.exps, 0, d, &mut cur, &mut out, d);
        }
        out
    }

    /// Evaluates the monomial at a point given by flat values.
    pub fn eval(&self, point: &[f64]) -> f64 {
        self.exps.iter().map(|&(v, e)| point[v as usize].powi(e as i32)).product()
    }

    /// Renders as `x[i1,...,id]^e * ...` (or `1`).
    pub fn display<'a>(&'a self, shape: &'a Shape) -> MonomialDisplay<'a> {
        MonomialDisplay { m: self, shape }
    }
}

impl Ord for Monomial {
    /// Grevlex: higher degree first; on ties, the monomial whose exponent is
    /// smaller at the last variable where the two differ is the larger one.
    fn cmp(&self, other: &Self) -> Ordering {
        match self.degree.cmp(&other.degree) {
            Ordering::Equal => {}
            o => return o,
        }
        let (mut i, mut j) = (self.exps.len(), other.exps.len());
        while i > 0 && j > 0 {
            let (a, b) = (self.exps[i - 1], other.exps[j - 1]);
            match a.0.cmp(&b.0) {
                // `self` has a positive exponent at a later variable than `other` does
                Ordering::Greater => return Ordering::Less,
                Ordering::Less => return Ordering::Greater,
                Ordering::Equal => {
                    if a.1 != b.1 {
                        return b.1.cmp(&a.1);
                    }
                    i -= 1;
                    j -= 1;
                }
            }
        }
        // equal degrees and one exhausted implies both exhausted
        Ordering::Equal
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub struct MonomialDisplay<'a> {
    m: &'a Monomial,
    shape: &'a Shape,
}

impl fmt::Display for MonomialDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.m.is_one() {
            return f.write_str("1");
        }
        for (k, (v, e)) in self.m.exponents().enumerate() {
            if k > 0 {
                f.write_str(" * ")?;
            }
            let a = self.shape.index(v);
            let coords: Vec<String> = a.coords().iter().map(|c| c.to_string()).collect();
            write!(f, "x[{}]", coords.join(","))?;
            if e > 1 {
                write!(f, "^{e}")?;
            }
        }
        Ok(())
    }
}
