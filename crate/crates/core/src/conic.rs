//! Standard-form conic programs
//!
//! ```text
//! minimize    c'x
//! subject to  A x + s = b,   s ∈ {0}^z × R_+^l × S_+^{n_1} × ... × S_+^{n_q}
//! ```
//!
//! PSD blocks are stored in scaled vectorized form: the lower triangle
//! column by column, off-diagonal entries multiplied by `√2`, so that the
//! Euclidean inner product of two vectors equals the trace inner product of
//! the matrices.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Compressed sparse column matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    colptr: Vec<usize>,
    rowidx: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseMatrix {
    /// Sums duplicate entries and drops explicit zeros.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut t: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(r, c, v) in triplets {
            if r >= nrows || c >= ncols {
                return Err(Error::DimensionMismatch(format!("entry ({r},{c}) outside {nrows}x{ncols}")));
            }
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!("non-finite matrix entry at ({r},{c})")));
            }
            t.push((c, r, v));
        }
        t.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut colptr = vec![0; ncols + 1];
        let mut rowidx = Vec::with_capacity(t.len());
        let mut vals: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (c, r, v) in t {
            if last == Some((c, r)) {
                *vals.last_mut().unwrap() += v;
                continue;
            }
            rowidx.push(r);
            vals.push(v);
            colptr[c + 1] += 1;
            last = Some((c, r));
        }
        for c in 0..ncols {
            colptr[c + 1] += colptr[c];
        }
        let mut m = Self { nrows, ncols, colptr, rowidx, vals };
        m.prune();
        Ok(m)
    }

    fn prune(&mut self) {
        let mut colptr = vec![0; self.ncols + 1];
        let mut rowidx = Vec::with_capacity(self.rowidx.len());
        let mut vals = Vec::with_capacity(self.vals.len());
        for c in 0..self.ncols {
            for k in self.colptr[c]..self.colptr[c + 1] {
                if self.vals[k] != 0.0 {
                    rowidx.push(self.rowidx[k]);
                    vals.push(self.vals[k]);
                }
            }
            colptr[c + 1] = rowidx.len();
        }
        self.colptr = colptr;
        self.rowidx = rowidx;
        self.vals = vals;
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `(row, value)` entries of column `c`.
    pub fn column(&self, c: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.colptr[c]..self.colptr[c + 1]).map(move |k| (self.rowidx[k], self.vals[k]))
    }

    /// All `(row, col, value)` entries.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.ncols).flat_map(|c| self.column(c).map(move |(r, v)| (r, c, v))).collect()
    }

    /// `y += A x`
    pub fn mul_add(&self, x: &[f64], y: &mut [f64]) {
        for c in 0..self.ncols {
            let xc = x[c];
            if xc == 0.0 {
                continue;
            }
            for k in self.colptr[c]..self.colptr[c + 1] {
                y[self.rowidx[k]] += self.vals[k] * xc;
            }
        }
    }

    /// `y += A' x`
    pub fn tmul_add(&self, x: &[f64], y: &mut [f64]) {
        for c in 0..self.ncols {
            let mut acc = 0.0;
            for k in self.colptr[c]..self.colptr[c + 1] {
                acc += self.vals[k] * x[self.rowidx[k]];
            }
            y[c] += acc;
        }
    }

    pub(crate) fn scale(&mut self, row: &[f64], col: &[f64]) {
        for c in 0..self.ncols {
            for k in self.colptr[c]..self.colptr[c + 1] {
                self.vals[k] *= row[self.rowidx[k]] * col[c];
            }
        }
    }

    /// Largest absolute entry of each row and each column.
    pub(crate) fn abs_max_rows_cols(&self) -> (Vec<f64>, Vec<f64>) {
        let mut rows = vec![0.0f64; self.nrows];
        let mut cols = vec![0.0f64; self.ncols];
        for c in 0..self.ncols {
            for k in self.colptr[c]..self.colptr[c + 1] {
                let v = self.vals[k].abs();
                rows[self.rowidx[k]] = rows[self.rowidx[k]].max(v);
                cols[c] = cols[c].max(v);
            }
        }
        (rows, cols)
    }
}

/// Cone layout of the slack vector, in order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Cones {
    /// Rows constrained to zero (equalities).
    pub zero: usize,
    /// Rows constrained to be nonnegative.
    pub nonneg: usize,
    /// Side lengths of PSD blocks.
    pub psd: Vec<usize>,
}

impl Cones {
    pub fn dim(&self) -> usize {
        self.zero + self.nonneg + self.psd.iter().map(|&n| svec_len(n)).sum::<usize>()
    }
}

pub fn svec_len(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Position of entry `(i, j)`, `i >= j`, in the scaled vectorization of an
/// `n x n` symmetric matrix.
pub fn svec_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i >= j { (i, j) } else { (j, i) };
    j * n - j * (j + 1) / 2 + i
}

/// A conic program in standard form.
#[derive(Debug, Clone, PartialEq)]
pub struct ConicProblem {
    pub a: SparseMatrix,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub cones: Cones,
}

impl ConicProblem {
    pub fn new(a: SparseMatrix, b: Vec<f64>, c: Vec<f64>, cones: Cones) -> Result<Self> {
        let p = Self { a, b, c, cones };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.cones.dim();
        if self.a.nrows() != m || self.b.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "cones need {m} rows, A has {} and b has {}",
                self.a.nrows(),
                self.b.len()
            )));
        }
        if self.a.ncols() != self.c.len() {
            return Err(Error::DimensionMismatch(format!("A has {} columns, c has {}", self.a.ncols(), self.c.len())));
        }
        if self.b.iter().chain(&self.c).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("b and c must be finite".into()));
        }
        Ok(())
    }

    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn num_rows(&self) -> usize {
        self.b.len()
    }

    /// Plain-text dump for debugging:
    ///
    /// ```text
    /// conic-problem v1
    /// vars <n> rows <m>
    /// cones zero <z> nonneg <l> psd <n_1> <n_2> ...
    /// c <n values>
    /// b <m values>
    /// A <nnz>
    /// <row> <col> <value>      (one line per nonzero, column-major)
    /// ```
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(" ");
        writeln!(out, "conic-problem v1").unwrap();
        writeln!(out, "vars {} rows {}", self.num_vars(), self.num_rows()).unwrap();
        let psd: Vec<String> = self.cones.psd.iter().map(|n| n.to_string()).collect();
        writeln!(out, "cones zero {} nonneg {} psd {}", self.cones.zero, self.cones.nonneg, psd.join(" ")).unwrap();
        writeln!(out, "c {}", join(&self.c)).unwrap();
        writeln!(out, "b {}", join(&self.b)).unwrap();
        writeln!(out, "A {}", self.a.nnz()).unwrap();
        for (r, c, v) in self.a.triplets() {
            writeln!(out, "{r} {c} {v:e}").unwrap();
        }
        out
    }
}

/// Affine expression `constant + Σ coef * x_var`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Affine {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl Affine {
    pub fn var(v: usize) -> Self {
        Self { terms: vec![(v, 1.0)], constant: 0.0 }
    }

    pub fn constant(c: f64) -> Self {
        Self { terms: Vec::new(), constant: c }
    }

    pub fn linear(terms: Vec<(usize, f64)>) -> Self {
        Self { terms, constant: 0.0 }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(v, c)| c * x[v]).sum::<f64>()
    }
}

/// Symmetric matrix whose lower-triangle entries are affine in the
/// decision variables; unlisted entries are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdBlock {
    pub dim: usize,
    /// `((i, j), expr)` with `i >= j`.
    pub entries: Vec<((usize, usize), Affine)>,
}

/// Incremental construction of a [`ConicProblem`].
#[derive(Debug, Clone, Default)]
pub struct ProblemBuilder {
    num_vars: usize,
    objective: Vec<f64>,
    equalities: Vec<(Affine, f64)>,
    nonnegs: Vec<Affine>,
    blocks: Vec<PsdBlock>,
}

impl ProblemBuilder {
    pub fn new(num_vars: usize) -> Self {
        Self { num_vars, objective: vec![0.0; num_vars], ..Self::default() }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn add_var(&mut self) -> usize {
        self.num_vars += 1;
        self.objective.push(0.0);
        self.num_vars - 1
    }

    pub fn set_objective(&mut self, var: usize, coef: f64) {
        self.objective[var] = coef;
    }

    /// `expr == rhs`
    pub fn add_equality(&mut self, expr: Affine, rhs: f64) {
        self.equalities.push((expr, rhs));
    }

    /// `expr >= 0`
    pub fn add_nonneg(&mut self, expr: Affine) {
        self.nonnegs.push(expr);
    }

    pub fn add_psd_block(&mut self, block: PsdBlock) {
        self.blocks.push(block);
    }

    pub fn build(self) -> Result<ConicProblem> {
        let mut trip = Vec::new();
        let mut b = Vec::new();
        let mut row = 0;
        let check = |e: &Affine| -> Result<()> {
            match e.terms.iter().find(|t| t.0 >= self.num_vars) {
                Some(t) => Err(Error::DimensionMismatch(format!("variable {} out of range", t.0))),
                None => Ok(()),
            }
        };
        for (e, rhs) in &self.equalities {
            check(e)?;
            trip.extend(e.terms.iter().map(|&(v, c)| (row, v, c)));
            b.push(rhs - e.constant);
            row += 1;
        }
        for e in &self.nonnegs {
            check(e)?;
            trip.extend(e.terms.iter().map(|&(v, c)| (row, v, -c)));
            b.push(e.constant);
            row += 1;
        }
        for blk in &self.blocks {
            let len = svec_len(blk.dim);
            let mut bb = vec![0.0; len];
            for ((i, j), e) in &blk.entries {
                check(e)?;
                if *i >= blk.dim || j > i {
                    return Err(Error::DimensionMismatch(format!("PSD entry ({i},{j}) invalid for size {}", blk.dim)));
                }
                let scale = if i == j { 1.0 } else { std::f64::consts::SQRT_2 };
                let pos = row + svec_index(blk.dim, *i, *j);
                trip.extend(e.terms.iter().map(|&(v, c)| (pos, v, -scale * c)));
                bb[pos - row] += scale * e.constant;
            }
            b.extend(bb);
            row += len;
        }
        let cones = Cones {
            zero: self.equalities.len(),
            nonneg: self.nonnegs.len(),
            psd: self.blocks.iter().map(|b| b.dim).collect(),
        };
        let a = SparseMatrix::from_triplets(row, self.num_vars, &trip)?;
        ConicProblem::new(a, b, self.objective, cones)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates() {
        let a = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 0, 2.0), (1, 1, 1.0), (1, 1, -1.0)]).unwrap();
        assert_eq!(a.triplets(), vec![(0, 0, 3.0)]);
        let mut y = vec![0.0; 2];
        a.mul_add(&[1.0, 5.0], &mut y);
        assert_eq!(y, vec![3.0, 0.0]);
        assert!(SparseMatrix::from_triplets(1, 1, &[(1, 0, 1.0)]).is_err());
    }

    #[test]
    fn svec_layout() {
        assert_eq!(svec_index(3, 0, 0), 0);
        assert_eq!(svec_index(3, 2, 0), 2);
        assert_eq!(svec_index(3, 1, 1), 3);
        assert_eq!(svec_index(3, 2, 1), 4);
        assert_eq!(svec_index(3, 2, 2), 5);
        assert_eq!(svec_index(3, 0, 2), 2);
    }

    #[test]
    fn builder_layout_and_dump() {
        // min y  s.t. [[1, y], [y, 1]] psd
        let mut pb = ProblemBuilder::new(1);
        pb.set_objective(0, 1.0);
        pb.add_psd_block(PsdBlock {
            dim: 2,
            entries: vec![((0, 0), Affine::constant(1.0)), ((1, 0), Affine::var(0)), ((1, 1), Affine::constant(1.0))],
        });
        let p = pb.build().unwrap();
        assert_eq!(p.cones.dim(), 3);
        assert_eq!(p.b, vec![1.0, 0.0, 1.0]);
        assert_eq!(p.a.triplets(), vec![(1, 0, -std::f64::consts::SQRT_2)]);
        let text = p.dump();
        assert!(text.starts_with("conic-problem v1\nvars 1 rows 3\ncones zero 0 nonneg 0 psd 2\n"));
    }
}
