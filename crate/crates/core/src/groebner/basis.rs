use std::collections::{BTreeSet, HashMap};
use std::fmt;

use num_traits::One;

use super::monomial::Monomial;
use super::polynomial::{Coeff, Polynomial};
use crate::error::{Error, Result};
use crate::tensor::{bar_wedge_vee, wedge_vee, Shape};

/// The exponent `p` of a nuclear p-norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum NormExponent {
    One,
    /// An even exponent `p >= 2`.
    Even(u32),
    Infinity,
}

impl NormExponent {
    pub fn finite(p: u32) -> Result<Self> {
        match p {
            0 => Err(Error::InvalidArgument("p must be positive".into())),
            1 => Ok(NormExponent::One),
            p if p % 2 == 1 => Err(Error::OddExponent(p)),
            p => Ok(NormExponent::Even(p)),
        }
    }

    /// Degree of the polynomial that pins the norm (`p`, or 2 for `inf`).
    pub fn degree(&self) -> u32 {
        match self {
            NormExponent::One => 2,
            NormExponent::Even(p) => *p,
            NormExponent::Infinity => 2,
        }
    }
}

impl std::str::FromStr for NormExponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinity") {
            return Ok(NormExponent::Infinity);
        }
        let p: u32 = t.parse().map_err(|_| Error::Parse(format!("p must be a positive integer or `inf`, got {s:?}")))?;
        NormExponent::finite(p)
    }
}

impl TryFrom<String> for NormExponent {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<NormExponent> for String {
    fn from(p: NormExponent) -> String {
        p.to_string()
    }
}

impl fmt::Display for NormExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormExponent::One => f.write_str("1"),
            NormExponent::Even(p) => write!(f, "{p}"),
            NormExponent::Infinity => f.write_str("inf"),
        }
    }
}

/// Which ideal a basis generates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IdealKind {
    /// The rank-1 ideal `I_0`.
    Rank1,
    /// The nuclear p-norm ideal `I_p`.
    Norm(NormExponent),
    /// A user-supplied generating set.
    Custom,
}

/// Ordered list of polynomials with a leading-monomial index.
#[derive(Debug, Clone)]
pub struct GroebnerBasis {
    shape: Shape,
    kind: IdealKind,
    polys: Vec<Polynomial>,
    leads: Vec<Monomial>,
    /// leading monomial -> smallest generator position having it
    lead_index: HashMap<Monomial, usize>,
    lead_degrees: BTreeSet<u32>,
}

impl GroebnerBasis {
    /// Wraps arbitrary nonzero polynomials, made monic; no Gröbner property
    /// is assumed (see [`buchberger_check`]).
    pub fn from_polynomials(shape: Shape, kind: IdealKind, polys: Vec<Polynomial>) -> Result<Self> {
        if polys.iter().any(|p| p.is_zero()) {
            return Err(Error::InvalidArgument("generators must be nonzero".into()));
        }
        let polys: Vec<Polynomial> = polys.iter().map(|p| p.monic()).collect();
        let leads: Vec<Monomial> = polys.iter().map(|p| p.leading_monomial().unwrap().clone()).collect();
        let mut lead_index = HashMap::new();
        for (i, m) in leads.iter().enumerate() {
            lead_index.entry(m.clone()).or_insert(i);
        }
        let lead_degrees = leads.iter().map(|m| m.degree()).collect();
        Ok(Self { shape, kind, polys, leads, lead_index, lead_degrees })
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn kind(&self) -> &IdealKind {
        &self.kind
    }

    pub fn polynomials(&self) -> &[Polynomial] {
        &self.polys
    }

    pub fn leading_monomials(&self) -> &[Monomial] {
        &self.leads
    }

    pub fn len(&self) -> usize {
        self.polys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polys.is_empty()
    }

    /// Position of the first generator whose leading monomial divides `m`.
    pub fn find_divisor(&self, m: &Monomial) -> Option<usize> {
        let mut best: Option<usize> = None;
        for &d in &self.lead_degrees {
            if d > m.degree() {
                break;
            }
            for cand in m.divisors_of_degree(d) {
                if let Some(&i) = self.lead_index.get(&cand) {
                    best = Some(best.map_or(i, |b: usize| b.min(i)));
                }
            }
        }
        best
    }

    pub fn is_standard(&self, m: &Monomial) -> bool {
        self.find_divisor(m).is_none()
    }
}

fn binomial(a: usize, b: usize, c: usize, d: usize) -> Polynomial {
    let mut p = Polynomial::monomial(Monomial::from_vars([a, b]));
    p.add_term(Monomial::from_vars([c, d]), -Coeff::one());
    p
}

fn power_sum_minus_one(shape: &Shape, p: u32) -> Polynomial {
    let mut f = Polynomial::constant(-Coeff::one());
    for v in 0..shape.len() {
        f.add_term(Monomial::var_pow(v, p), Coeff::one());
    }
    f
}

fn rank1_generators(shape: &Shape) -> Vec<Polynomial> {
    let idx: Vec<_> = shape.indices().collect();
    let mut out = Vec::new();
    for i in 0..idx.len() {
        for j in (i + 1)..idx.len() {
            let (a, b) = (&idx[i], &idx[j]);
            if a.0.iter().zip(&b.0).any(|(x, y)| x > y) {
                let (lo, hi) = wedge_vee(a, b).expect("same shape");
                out.push(binomial(i, j, shape.offset(&lo), shape.offset(&hi)));
            }
        }
    }
    out
}

/// Emits the explicit reduced Gröbner basis of `I_0` (`p = None`) or `I_p`.
pub fn build_groebner(shape: &Shape, p: Option<NormExponent>) -> Result<GroebnerBasis> {
    let n = shape.len();
    let (kind, polys) = match p {
        None => (IdealKind::Rank1, rank1_generators(shape)),
        Some(NormExponent::One) => {
            let mut polys = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    polys.push(Polynomial::monomial(Monomial::from_vars([i, j])));
                }
            }
            polys.push(power_sum_minus_one(shape, 2));
            for v in 1..n {
                let mut f = Polynomial::monomial(Monomial::var_pow(v, 3));
                f.add_term(Monomial::var(v), -Coeff::one());
                polys.push(f);
            }
            (IdealKind::Norm(NormExponent::One), polys)
        }
        Some(NormExponent::Even(q)) => {
            if q < 2 || q % 2 == 1 {
                return Err(Error::OddExponent(q));
            }
            let mut polys = vec![power_sum_minus_one(shape, q)];
            polys.extend(rank1_generators(shape));
            (IdealKind::Norm(NormExponent::Even(q)), polys)
        }
        Some(NormExponent::Infinity) => {
            let mut polys: Vec<Polynomial> = (0..n)
                .map(|v| {
                    let mut f = Polynomial::monomial(Monomial::var_pow(v, 2));
                    f.add_term(Monomial::one(), -Coeff::one());
                    f
                })
                .collect();
            let idx: Vec<_> = shape.indices().collect();
            for i in 0..n {
                for j in (i + 1)..n {
                    let (a, b) = (&idx[i], &idx[j]);
                    let qualifies = a
                        .0
                        .iter()
                        .zip(&b.0)
                        .zip(shape.dims())
                        .any(|((&x, &y), &ni)| x > y || (x == y && x < ni));
                    if qualifies {
                        let (lo, hi) = bar_wedge_vee(a, b, shape).expect("same shape");
                        polys.push(binomial(i, j, shape.offset(&lo), shape.offset(&hi)));
                    }
                }
            }
            (IdealKind::Norm(NormExponent::Infinity), polys)
        }
    };
    GroebnerBasis::from_polynomials(shape.clone(), kind, polys)
}

/// Multivariate division remainder of `f` modulo `g`, always rewriting the
/// grevlex-largest reducible monomial first.
pub fn reduce(f: &Polynomial, g: &GroebnerBasis) -> Polynomial {
    let mut p = f.clone();
    let mut rem = Polynomial::zero();
    while let Some((m, c)) = p.pop_leading() {
        match g.find_divisor(&m) {
            Some(i) => {
                let lead = &g.leads[i];
                let q = lead.quotient_of(&m).expect("divisor found");
                // generators are monic, so the popped term cancels exactly
                for (gm, gc) in g.polys[i].terms().rev().skip(1) {
                    p.add_term(gm.mul(&q), -(&c * gc));
                }
            }
            None => rem.add_term(m, c),
        }
    }
    rem
}

/// `S(f, g) = lcm/LT(f) * f - lcm/LT(g) * g`.
pub fn s_polynomial(f: &Polynomial, g: &Polynomial) -> Result<Polynomial> {
    let (fm, fc) = f.leading().ok_or_else(|| Error::InvalidArgument("S-polynomial of zero".into()))?;
    let (gm, gc) = g.leading().ok_or_else(|| Error::InvalidArgument("S-polynomial of zero".into()))?;
    let l = fm.lcm(gm);
    let qf = fm.quotient_of(&l).expect("lcm");
    let qg = gm.quotient_of(&l).expect("lcm");
    Ok(f.mul_term(&qf, &fc.recip()).sub(&g.mul_term(&qg, &gc.recip())))
}

/// Buchberger's criterion: every pairwise S-polynomial reduces to zero.
pub fn buchberger_check(g: &GroebnerBasis) -> bool {
    first_buchberger_failure(g).is_none()
}

/// First pair `(i, j)` whose S-polynomial has a nonzero remainder.
pub fn first_buchberger_failure(g: &GroebnerBasis) -> Option<(usize, usize)> {
    let polys = g.polynomials();
    for i in 0..polys.len() {
        for j in (i + 1)..polys.len() {
            let s = s_polynomial(&polys[i], &polys[j]).expect("generators are nonzero");
            if !reduce(&s, g).is_zero() {
                return Some((i, j));
            }
        }
    }
    None
}

/// Whether every generator is monic and no monomial of a generator is
/// divisible by the leading monomial of another generator.
pub fn is_reduced(g: &GroebnerBasis) -> bool {
    let leads = g.leading_monomials();
    g.polynomials().iter().enumerate().all(|(i, p)| {
        p.leading().map(|(_, c)| c.is_one()).unwrap_or(false)
            && p.terms().all(|(m, _)| leads.iter().enumerate().all(|(j, l)| j == i || !l.divides(m)))
    })
}

/// Standard monomials of degree at most `k`, ascending in grevlex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonomialBasis {
    monomials: Vec<Monomial>,
}

impl MonomialBasis {
    /// Sorts and deduplicates; the caller vouches that the monomials are
    /// standard.
    pub(crate) fn from_monomials(mut monomials: Vec<Monomial>) -> Self {
        monomials.sort();
        monomials.dedup();
        Self { monomials }
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn position(&self, m: &Monomial) -> Option<usize> {
        self.monomials.binary_search(m).ok()
    }
}

/// Standard monomials up to degree `k`, grown degree by degree. Divisors of
/// standard monomials are standard, so extending only standard monomials of
/// the previous degree finds them all.
pub fn monomial_basis(g: &GroebnerBasis, k: u32) -> MonomialBasis {
    let n = g.shape().len();
    let mut all = vec![Monomial::one()];
    let mut level = vec![Monomial::one()];
    for _ in 0..k {
        let mut next = Vec::new();
        for m in &level {
            let start = m.max_var().unwrap_or(0);
            for v in start..n {
                let cand = m.mul(&Monomial::var(v));
                if g.is_standard(&cand) {
                    next.push(cand);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        all.extend(next.iter().cloned());
        level = next;
    }
    all.sort();
    MonomialBasis { monomials: all }
}

/// Largest degree of a standard monomial, if the quotient ring is finite
/// dimensional within degree `cap`.
pub fn max_standard_degree(g: &GroebnerBasis, cap: u32) -> Option<u32> {
    let basis = monomial_basis(g, cap + 1);
    let top = basis.monomials().iter().map(|m| m.degree()).max().unwrap_or(0);
    (top <= cap).then_some(top)
}
