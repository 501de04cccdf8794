//! Moment-matrix layouts of theta bodies and the conic programs built on
//! them: norm evaluation, recovery from linear measurements, and sum of
//! squares certificates.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::conic::{svec_index, svec_len, Affine, ConicProblem, ProblemBuilder, PsdBlock};
use crate::error::{Error, Result};
use crate::groebner::{
    coeff_to_f64, monomial_basis, normal_form_g0, normal_form_ginf, reduce, GroebnerBasis, Monomial, MonomialBasis,
    NormExponent, Polynomial,
};
use crate::tensor::{Shape, Tensor};

/// Cells of the moment matrix indexed by a basis `B_k` of standard
/// monomials, each expanded over moment slots (standard monomials of degree
/// at most `2k`) after reduction.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentLayout {
    shape: Shape,
    k: u32,
    basis: MonomialBasis,
    /// ascending grevlex, so slot 0 is the constant monomial
    slots: Vec<Monomial>,
    slot_index: HashMap<Monomial, usize>,
    /// lower triangle in column-major order (see `svec_index`)
    cells: Vec<Vec<(usize, f64)>>,
}

impl MomentLayout {
    fn from_cells(shape: Shape, k: u32, basis: MonomialBasis, raw: Vec<Vec<(Monomial, f64)>>) -> Self {
        let mut slots: Vec<Monomial> = raw.iter().flatten().map(|(m, _)| m.clone()).collect();
        slots.sort();
        slots.dedup();
        let slot_index: HashMap<Monomial, usize> = slots.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
        let cells = raw
            .into_iter()
            .map(|cell| {
                let mut c: Vec<(usize, f64)> = cell.into_iter().map(|(m, v)| (slot_index[&m], v)).collect();
                c.sort_by_key(|t| t.0);
                c
            })
            .collect();
        Self { shape, k, basis, slots, slot_index, cells }
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn basis(&self) -> &MonomialBasis {
        &self.basis
    }

    /// Side length of the moment matrix.
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn slots(&self) -> &[Monomial] {
        &self.slots
    }

    pub fn num_slots(&self) -> usize {
        self.slots.len()
    }

    pub fn slot_of(&self, m: &Monomial) -> Option<usize> {
        self.slot_index.get(m).copied()
    }

    /// Expansion of cell `(i, j)` as `(slot, coefficient)` pairs.
    pub fn cell(&self, i: usize, j: usize) -> &[(usize, f64)] {
        &self.cells[svec_index(self.dim(), i, j)]
    }

    /// Position of the degree-one basis monomial `x_v` in the basis.
    pub fn linear_position(&self, v: usize) -> Option<usize> {
        self.basis.position(&Monomial::var(v))
    }

    /// Moment matrix for slot values `y`.
    pub fn evaluate(&self, y: &[f64]) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            for i in j..n {
                let v: f64 = self.cell(i, j).iter().map(|&(s, c)| c * y[s]).sum();
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    /// Canonical description of the linear constraints the layout imposes
    /// on a symmetric matrix: for each slot, the sorted list of cells that
    /// hit it with their coefficients. Independent of slot numbering.
    pub fn constraint_set(&self) -> Vec<Vec<((usize, usize), i64)>> {
        let mut per_slot: Vec<Vec<((usize, usize), i64)>> = vec![Vec::new(); self.num_slots()];
        let n = self.dim();
        for j in 0..n {
            for i in j..n {
                for &(s, c) in self.cell(i, j) {
                    per_slot[s].push(((i, j), (c * 1e9).round() as i64));
                }
            }
        }
        for v in &mut per_slot {
            v.sort_unstable();
        }
        per_slot.sort_unstable();
        per_slot
    }

    /// For each slot, the linear form in Gram entries `Q_ij` (`i >= j`)
    /// giving the coefficient of that slot in `Σ Q_ij b_i b_j` reduced.
    /// Off-diagonal cells count twice.
    pub fn gram_constraints(&self) -> Vec<Vec<((usize, usize), f64)>> {
        let mut per_slot: Vec<Vec<((usize, usize), f64)>> = vec![Vec::new(); self.num_slots()];
        let n = self.dim();
        for j in 0..n {
            for i in j..n {
                let w = if i == j { 1.0 } else { 2.0 };
                for &(s, c) in self.cell(i, j) {
                    per_slot[s].push(((i, j), w * c));
                }
            }
        }
        per_slot
    }
}

/// Layout of the moment matrix over `B_k` modulo `g`, with expansions from
/// exact reduction.
pub fn build_moment_layout(g: &GroebnerBasis, k: u32) -> Result<MomentLayout> {
    if k == 0 {
        return Err(Error::InvalidArgument("relaxation order k must be at least 1".into()));
    }
    let basis = monomial_basis(g, k);
    let n = basis.len();
    let mut cache: HashMap<Monomial, Vec<(Monomial, f64)>> = HashMap::new();
    let mut raw = Vec::with_capacity(svec_len(n));
    let mons = basis.monomials();
    for j in 0..n {
        for i in j..n {
            let prod = mons[i].mul(&mons[j]);
            if let Some(c) = cache.get(&prod) {
                raw.push(c.clone());
                continue;
            }
            let r = reduce(&Polynomial::monomial(prod.clone()), g);
            if r.degree() > 2 * k {
                return Err(Error::DegreeExceeded { degree: r.degree(), limit: 2 * k });
            }
            let cell: Vec<(Monomial, f64)> = r.terms().map(|(m, c)| (m.clone(), coeff_to_f64(c))).collect();
            cache.insert(prod, cell.clone());
            raw.push(cell);
        }
    }
    Ok(MomentLayout::from_cells(g.shape().clone(), k, basis, raw))
}

/// First-order layout for `p = 2` or `p = ∞` written down directly:
/// `M_{a,b} = M_{a∧b, a∨b}` with `M_{0,0} = Σ_a M_{a,a}` for `p = 2`, and
/// `M_{a,b} = M_{a∧̄b, a∨̄b}` with `M_{a,a} = M_{0,0}` for `p = ∞`.
pub fn theta1_closed_form(shape: &Shape, p: NormExponent) -> Result<MomentLayout> {
    let n_vars = shape.len();
    let mut mons = vec![Monomial::one()];
    mons.extend((0..n_vars).map(Monomial::var));
    let basis = MonomialBasis::from_monomials(mons);
    let pos: Vec<usize> = (0..n_vars).map(|v| basis.position(&Monomial::var(v)).expect("linear monomial")).collect();
    let mut by_pos: Vec<Option<usize>> = vec![None; basis.len()];
    for (v, &q) in pos.iter().enumerate() {
        by_pos[q] = Some(v);
    }
    let n = basis.len();
    let mut raw = Vec::with_capacity(svec_len(n));
    for j in 0..n {
        for i in j..n {
            let cell: Vec<(Monomial, f64)> = match (by_pos[i], by_pos[j]) {
                (None, None) => vec![(Monomial::one(), 1.0)],
                (Some(v), None) | (None, Some(v)) => vec![(Monomial::var(v), 1.0)],
                (Some(a), Some(b)) => match p {
                    NormExponent::Even(2) => {
                        if a == b && a == 0 {
                            // x_{1..1}^2 = 1 - Σ_{c ≠ first} x_c^2
                            let mut c = vec![(Monomial::one(), 1.0)];
                            c.extend((1..n_vars).map(|v| (Monomial::var_pow(v, 2), -1.0)));
                            c
                        } else {
                            vec![(normal_form_g0(&Monomial::from_vars([a, b]), shape), 1.0)]
                        }
                    }
                    NormExponent::Infinity => vec![(normal_form_ginf(&Monomial::from_vars([a, b]), shape), 1.0)],
                    other => {
                        return Err(Error::InvalidArgument(format!("closed-form layout needs p = 2 or inf, got {other}")))
                    }
                },
            };
            raw.push(cell);
        }
    }
    Ok(MomentLayout::from_cells(shape.clone(), 1, basis, raw))
}

fn cell_affine(layout: &MomentLayout, i: usize, j: usize) -> Affine {
    Affine::linear(layout.cell(i, j).to_vec())
}

fn moment_block(layout: &MomentLayout) -> PsdBlock {
    let n = layout.dim();
    let mut entries = Vec::with_capacity(svec_len(n));
    for j in 0..n {
        for i in j..n {
            entries.push(((i, j), cell_affine(layout, i, j)));
        }
    }
    PsdBlock { dim: n, entries }
}

fn constant_position(layout: &MomentLayout) -> usize {
    layout.basis().position(&Monomial::one()).expect("constant monomial is standard")
}

/// Gauge program `min M_{0,0}` over PSD moment matrices with `M_{0,a} = x_a`.
/// Decision variables are the layout's slots.
pub fn assemble_norm_sdp(layout: &MomentLayout, x: &Tensor) -> Result<ConicProblem> {
    if x.shape() != layout.shape() {
        return Err(Error::DimensionMismatch(format!("tensor shape {} vs layout shape {}", x.shape(), layout.shape())));
    }
    let mut b = ProblemBuilder::new(layout.num_slots());
    let c0 = constant_position(layout);
    for &(s, c) in layout.cell(c0, c0) {
        b.set_objective(s, c);
    }
    for (v, &xa) in x.values().iter().enumerate() {
        let q = layout.linear_position(v).ok_or_else(|| Error::InvalidArgument(format!("x_{v} is not standard")))?;
        b.add_equality(cell_affine(layout, q, c0), xa);
    }
    b.add_psd_block(moment_block(layout));
    b.build()
}

/// Norm minimization subject to `<A_i, x> = b_i`, with `x` read off the
/// degree-one slots.
pub fn assemble_recovery_sdp(layout: &MomentLayout, measurements: &[(Tensor, f64)]) -> Result<ConicProblem> {
    if measurements.is_empty() {
        return Err(Error::InvalidArgument("no measurements".into()));
    }
    let mut b = ProblemBuilder::new(layout.num_slots());
    let c0 = constant_position(layout);
    for &(s, c) in layout.cell(c0, c0) {
        b.set_objective(s, c);
    }
    let lin: Vec<Affine> = (0..layout.shape().len())
        .map(|v| {
            layout
                .linear_position(v)
                .map(|q| cell_affine(layout, q, c0))
                .ok_or_else(|| Error::InvalidArgument(format!("x_{v} is not standard")))
        })
        .collect::<Result<_>>()?;
    for (a, rhs) in measurements {
        if a.shape() != layout.shape() {
            return Err(Error::DimensionMismatch(format!("measurement shape {} vs {}", a.shape(), layout.shape())));
        }
        let mut terms = Vec::new();
        for (v, &w) in a.values().iter().enumerate() {
            if w != 0.0 {
                terms.extend(lin[v].terms.iter().map(|&(s, c)| (s, c * w)));
            }
        }
        b.add_equality(Affine::linear(terms), *rhs);
    }
    b.add_psd_block(moment_block(layout));
    b.build()
}

/// Reads `x` off the degree-one slots of a slot vector.
pub fn linear_part(layout: &MomentLayout, y: &[f64]) -> Result<Tensor> {
    let c0 = constant_position(layout);
    let vals = (0..layout.shape().len())
        .map(|v| {
            let q = layout.linear_position(v).ok_or_else(|| Error::InvalidArgument(format!("x_{v} is not standard")))?;
            Ok(layout.cell(q, c0).iter().map(|&(s, c)| c * y[s]).sum())
        })
        .collect::<Result<Vec<f64>>>()?;
    Tensor::new(layout.shape().clone(), vals)
}

/// Gram-form sum of squares program. Variables `0..svec_len(dim)` are the
/// Gram entries `Q_ij` (`i >= j`, column-major); further variables are
/// appended by the caller through `extra_vars`. `target` gives, per slot,
/// the affine form the coefficient must equal; monomials of the target that
/// are not slots are passed in `unmatched` and force their coefficient to
/// vanish.
pub(crate) fn gram_program(
    layout: &MomentLayout,
    target: &HashMap<usize, Affine>,
    unmatched: &[Affine],
    extra_vars: usize,
    objective: &[(usize, f64)],
) -> Result<ConicProblem> {
    let rows: Vec<Vec<(usize, f64)>> = (0..layout.dim()).map(|i| vec![(i, 1.0)]).collect();
    face_gram_program(layout, &rows, target, unmatched, extra_vars, objective)
}

/// As [`gram_program`], but squares are taken of the polynomials
/// `l_i = Σ_α rows[i][α] b_α` instead of the basis itself, i.e. the Gram
/// matrix over the basis is restricted to `V' Q V`.
pub(crate) fn face_gram_program(
    layout: &MomentLayout,
    rows: &[Vec<(usize, f64)>],
    target: &HashMap<usize, Affine>,
    unmatched: &[Affine],
    extra_vars: usize,
    objective: &[(usize, f64)],
) -> Result<ConicProblem> {
    let n = rows.len();
    let nq = svec_len(n);
    let mut b = ProblemBuilder::new(nq + extra_vars);
    for &(v, c) in objective {
        b.set_objective(v, c);
    }
    let mut per_slot: Vec<HashMap<usize, f64>> = vec![HashMap::new(); layout.num_slots()];
    for j in 0..n {
        for i in j..n {
            let w = if i == j { 1.0 } else { 2.0 };
            let q = svec_index(n, i, j);
            for &(al, va) in &rows[i] {
                for &(be, vb) in &rows[j] {
                    for &(s, c) in layout.cell(al, be) {
                        *per_slot[s].entry(q).or_insert(0.0) += w * va * vb * c;
                    }
                }
            }
        }
    }
    for (s, cells) in per_slot.into_iter().enumerate() {
        let mut terms: Vec<(usize, f64)> = cells.into_iter().filter(|t| t.1 != 0.0).collect();
        terms.sort_unstable_by_key(|t| t.0);
        let mut rhs = 0.0;
        if let Some(t) = target.get(&s) {
            terms.extend(t.terms.iter().map(|&(v, c)| (v, -c)));
            rhs = t.constant;
        }
        b.add_equality(Affine::linear(terms), rhs);
    }
    for t in unmatched {
        b.add_equality(Affine::linear(t.terms.iter().map(|&(v, c)| (v, -c)).collect()), t.constant);
    }
    let mut entries = Vec::with_capacity(nq);
    for j in 0..n {
        for i in j..n {
            entries.push(((i, j), Affine::var(svec_index(n, i, j))));
        }
    }
    b.add_psd_block(PsdBlock { dim: n, entries });
    b.build()
}

/// Splits the reduced polynomial into slot coefficients and leftovers.
pub(crate) fn target_of(layout: &MomentLayout, reduced: &Polynomial) -> (HashMap<usize, Affine>, Vec<Affine>) {
    let mut target = HashMap::new();
    let mut unmatched = Vec::new();
    for (m, c) in reduced.terms() {
        let a = Affine::constant(coeff_to_f64(c));
        match layout.slot_of(m) {
            Some(s) => {
                target.insert(s, a);
            }
            None => unmatched.push(a),
        }
    }
    (target, unmatched)
}

/// Feasibility program: `f` is a sum of squares of degree-`k` polynomials
/// modulo the ideal of `g`.
pub fn assemble_sos_sdp(f: &Polynomial, g: &GroebnerBasis, k: u32) -> Result<ConicProblem> {
    let r = reduce(f, g);
    if r.degree() > 2 * k {
        return Err(Error::DegreeExceeded { degree: r.degree(), limit: 2 * k });
    }
    let layout = build_moment_layout(g, k)?;
    let (target, unmatched) = target_of(&layout, &r);
    gram_program(&layout, &target, &unmatched, 0, &[])
}
