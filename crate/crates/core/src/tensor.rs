//! Dense real tensors addressed by 1-based multi-indices.
//!
//! Flattening is row-major (last coordinate fastest), so the lexicographic
//! order on multi-indices coincides with the order of flat offsets.

use std::fmt;
use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mode sizes `(n_1, ..., n_d)` of a tensor space.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Shape {
    dims: Vec<usize>,
}

impl Shape {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidShape("a shape needs at least one mode".into()));
        }
        if let Some(pos) = dims.iter().position(|&n| n == 0) {
            return Err(Error::InvalidShape(format!("mode {} has size 0", pos + 1)));
        }
        dims.iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(n))
            .ok_or_else(|| Error::InvalidShape("total size overflows".into()))?;
        Ok(Self { dims })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Number of modes `d`.
    pub fn order(&self) -> usize {
        self.dims.len()
    }

    /// Total number of entries `N`.
    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Largest mode size.
    pub fn max_dim(&self) -> usize {
        self.dims.iter().copied().max().unwrap_or(1)
    }

    pub fn contains(&self, a: &MultiIndex) -> bool {
        a.order() == self.order() && a.0.iter().zip(&self.dims).all(|(&c, &n)| c >= 1 && c <= n)
    }

    pub(crate) fn check(&self, a: &MultiIndex) -> Result<()> {
        if a.order() != self.order() {
            return Err(Error::DimensionMismatch(format!(
                "index {a} has {} coordinates, shape {self} has {} modes",
                a.order(),
                self.order()
            )));
        }
        if !self.contains(a) {
            return Err(Error::IndexOutOfRange(format!("{a} not in {self}")));
        }
        Ok(())
    }

    /// 0-based row-major offset of a valid multi-index.
    pub fn offset(&self, a: &MultiIndex) -> usize {
        debug_assert!(self.contains(a));
        a.0.iter().zip(&self.dims).fold(0, |acc, (&c, &n)| acc * n + (c - 1))
    }

    /// Inverse of [`Shape::offset`].
    pub fn index(&self, mut offset: usize) -> MultiIndex {
        let mut coords = vec![0; self.order()];
        for (c, &n) in coords.iter_mut().zip(&self.dims).rev() {
            *c = offset % n + 1;
            offset /= n;
        }
        MultiIndex(coords)
    }

    /// All multi-indices in lexicographic order.
    pub fn indices(&self) -> impl Iterator<Item = MultiIndex> + '_ {
        (0..self.len()).map(move |o| self.index(o))
    }

    /// The all-ones index `(1, ..., 1)`.
    pub fn first_index(&self) -> MultiIndex {
        MultiIndex(vec![1; self.order()])
    }

    /// The last index `(n_1, ..., n_d)`.
    pub fn last_index(&self) -> MultiIndex {
        MultiIndex(self.dims.clone())
    }
}

impl TryFrom<Vec<usize>> for Shape {
    type Error = Error;

    fn try_from(dims: Vec<usize>) -> Result<Self> {
        Shape::new(dims)
    }
}

impl From<Shape> for Vec<usize> {
    fn from(s: Shape) -> Self {
        s.dims
    }
}

impl std::str::FromStr for Shape {
    type Err = Error;

    /// Parses a comma-separated list such as `4,4,4`.
    fn from_str(s: &str) -> Result<Self> {
        let dims = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Parse(format!("bad mode size {t:?} in shape {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Shape::new(dims)
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.dims.iter().map(|n| n.to_string()).collect();
        write!(f, "{}", parts.join("x"))
    }
}

/// A 1-based point of `[n_1] x ... x [n_d]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    pub fn new(coords: Vec<usize>) -> Self {
        Self(coords)
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[usize] {
        &self.0
    }
}

impl From<Vec<usize>> for MultiIndex {
    fn from(c: Vec<usize>) -> Self {
        Self(c)
    }
}

impl From<&[usize]> for MultiIndex {
    fn from(c: &[usize]) -> Self {
        Self(c.to_vec())
    }
}

impl<const D: usize> From<[usize; D]> for MultiIndex {
    fn from(c: [usize; D]) -> Self {
        Self(c.to_vec())
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|c| c.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

fn same_order(a: &MultiIndex, b: &MultiIndex) -> Result<()> {
    if a.order() != b.order() {
        return Err(Error::DimensionMismatch(format!("{a} and {b} have different lengths")));
    }
    Ok(())
}

/// Componentwise minimum and maximum `(a ∧ b, a ∨ b)`.
pub fn wedge_vee(a: &MultiIndex, b: &MultiIndex) -> Result<(MultiIndex, MultiIndex)> {
    same_order(a, b)?;
    let lo = a.0.iter().zip(&b.0).map(|(&x, &y)| x.min(y)).collect();
    let hi = a.0.iter().zip(&b.0).map(|(&x, &y)| x.max(y)).collect();
    Ok((MultiIndex(lo), MultiIndex(hi)))
}

/// Barred variant: coordinates where `a` and `b` agree are sent to `n_i` in
/// both outputs, the others behave as in [`wedge_vee`].
pub fn bar_wedge_vee(a: &MultiIndex, b: &MultiIndex, shape: &Shape) -> Result<(MultiIndex, MultiIndex)> {
    same_order(a, b)?;
    shape.check(a)?;
    shape.check(b)?;
    let mut lo = Vec::with_capacity(a.order());
    let mut hi = Vec::with_capacity(a.order());
    for ((&x, &y), &n) in a.0.iter().zip(&b.0).zip(shape.dims()) {
        if x == y {
            lo.push(n);
            hi.push(n);
        } else {
            lo.push(x.min(y));
            hi.push(x.max(y));
        }
    }
    Ok((MultiIndex(lo), MultiIndex(hi)))
}

/// Which rewrite rule a pair of indices is tested against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairVariant {
    Standard,
    Barred,
}

/// Whether `{a, b}` is a fixed point of the (barred) wedge/vee rewrite.
pub fn is_reduced_pair(a: &MultiIndex, b: &MultiIndex, variant: PairVariant, shape: &Shape) -> Result<bool> {
    same_order(a, b)?;
    shape.check(a)?;
    shape.check(b)?;
    if a == b {
        return Err(Error::InvalidArgument("a reduced pair needs a != b".into()));
    }
    let (lo, hi) = match variant {
        PairVariant::Standard => wedge_vee(a, b)?,
        PairVariant::Barred => bar_wedge_vee(a, b, shape)?,
    };
    Ok((&lo == a && &hi == b) || (&lo == b && &hi == a))
}

/// Dense real tensor in row-major layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    shape: Shape,
    values: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Shape, values: Vec<f64>) -> Result<Self> {
        if values.len() != shape.len() {
            return Err(Error::DimensionMismatch(format!(
                "shape {shape} needs {} values, got {}",
                shape.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("tensor entries must be finite".into()));
        }
        Ok(Self { shape, values })
    }

    pub fn zeros(shape: Shape) -> Self {
        let n = shape.len();
        Self { shape, values: vec![0.0; n] }
    }

    pub fn filled(shape: Shape, v: f64) -> Self {
        let n = shape.len();
        Self { shape, values: vec![v; n] }
    }

    /// Standard basis tensor `e_a`.
    pub fn basis(shape: Shape, a: &MultiIndex) -> Result<Self> {
        shape.check(a)?;
        let mut t = Self::zeros(shape);
        let o = t.shape.offset(a);
        t.values[o] = 1.0;
        Ok(t)
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, a: &MultiIndex) -> f64 {
        self.values[self.shape.offset(a)]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Frobenius inner product.
    pub fn dot(&self, other: &Tensor) -> Result<f64> {
        self.same_shape(other)?;
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum())
    }

    pub fn scaled(&self, alpha: f64) -> Tensor {
        Tensor { shape: self.shape.clone(), values: self.values.iter().map(|v| alpha * v).collect() }
    }

    /// `alpha * self + beta * other`.
    pub fn combine(&self, alpha: f64, other: &Tensor, beta: f64) -> Result<Tensor> {
        self.same_shape(other)?;
        let values = self.values.iter().zip(&other.values).map(|(x, y)| alpha * x + beta * y).collect();
        Ok(Tensor { shape: self.shape.clone(), values })
    }

    fn same_shape(&self, other: &Tensor) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::DimensionMismatch(format!("shapes {} and {} differ", self.shape, other.shape)));
        }
        Ok(())
    }

    /// Reads the JSON document `{"shape": [...], "values": [...]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: Tensor = serde_json::from_str(text).map_err(|e| Error::Parse(format!("tensor file: {e}")))?;
        Tensor::new(raw.shape, raw.values)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("tensor serialization cannot fail")
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }
}

/// Outer product `f_1 ⊗ ... ⊗ f_d`.
pub fn rank1_tensor(factors: &[Vec<f64>]) -> Result<Tensor> {
    if factors.is_empty() {
        return Err(Error::InvalidArgument("rank-1 tensor needs at least one factor".into()));
    }
    if factors.iter().any(|f| f.is_empty()) {
        return Err(Error::InvalidArgument("rank-1 factors must be nonempty".into()));
    }
    let shape = Shape::new(factors.iter().map(|f| f.len()).collect())?;
    let mut values = vec![1.0];
    for f in factors {
        values = values.iter().flat_map(|&v| f.iter().map(move |&w| v * w)).collect();
    }
    Tensor::new(shape, values)
}

/// `max_{a,b} |x_a x_b - x_{a∧b} x_{a∨b}|`; vanishes exactly on tensors of
/// rank at most one.
pub fn rank1_residual(x: &Tensor) -> f64 {
    let shape = x.shape();
    let n = shape.len();
    let idx: Vec<MultiIndex> = shape.indices().collect();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let (lo, hi) = wedge_vee(&idx[i], &idx[j]).expect("indices of one shape");
            let r = (x.values[i] * x.values[j] - x.get(&lo) * x.get(&hi)).abs();
            worst = worst.max(r);
        }
    }
    worst
}

/// Whether `x` is rank-1 up to a residual of `1e-8 * max|x_a|^2`.
pub fn is_rank1(x: &Tensor) -> bool {
    let scale = x.max_abs();
    rank1_residual(x) <= 1e-8 * scale * scale.max(1.0)
}

/// Distribution of random low-rank instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TensorKind {
    /// Factor entries i.i.d. standard normal.
    Gaussian,
    /// Factor entries uniform on `{-1, +1}`, terms combined with standard
    /// normal coefficients.
    Signed,
}

impl std::str::FromStr for TensorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(TensorKind::Gaussian),
            "signed" => Ok(TensorKind::Signed),
            _ => Err(Error::Parse(format!("unknown tensor kind {s:?} (expected gaussian or signed)"))),
        }
    }
}

impl fmt::Display for TensorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TensorKind::Gaussian => "gaussian",
            TensorKind::Signed => "signed",
        })
    }
}

/// Seeded generator used for every random draw in the crate.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Counter-based seed derivation (splitmix64 finalizer), so that stream
/// `counter` of `master` can be regenerated independently of the others.
pub fn derive_seed(master: u64, counter: u64) -> u64 {
    let mut z = master ^ counter.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn random_gaussian(shape: &Shape, rng: &mut impl Rng) -> Tensor {
    let values = (0..shape.len()).map(|_| rng.sample(StandardNormal)).collect();
    Tensor { shape: shape.clone(), values }
}

/// Sum of `r` random rank-1 terms.
pub fn random_low_rank(shape: &Shape, r: usize, kind: TensorKind, seed: u64) -> Result<Tensor> {
    if r < 1 {
        return Err(Error::InvalidArgument("rank must be at least 1".into()));
    }
    let mut rng = seeded_rng(seed);
    let mut acc = Tensor::zeros(shape.clone());
    for _ in 0..r {
        let (factors, coeff): (Vec<Vec<f64>>, f64) = match kind {
            TensorKind::Gaussian => {
                let f = shape.dims().iter().map(|&n| (0..n).map(|_| rng.sample(StandardNormal)).collect()).collect();
                (f, 1.0)
            }
            TensorKind::Signed => {
                let f = shape
                    .dims()
                    .iter()
                    .map(|&n| (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect())
                    .collect();
                (f, rng.sample(StandardNormal))
            }
        };
        let term = rank1_tensor(&factors)?;
        acc = acc.combine(1.0, &term, coeff)?;
    }
    Ok(acc)
}

/// Unfolding with the modes in `row_modes` (0-based) indexing rows; both
/// sides are flattened lexicographically.
pub fn matricize(x: &Tensor, row_modes: &[usize]) -> Result<DMatrix<f64>> {
    let d = x.shape().order();
    let mut is_row = vec![false; d];
    for &m in row_modes {
        if m >= d {
            return Err(Error::InvalidArgument(format!("mode {m} out of range for order {d}")));
        }
        is_row[m] = true;
    }
    let nrow_modes = is_row.iter().filter(|&&r| r).count();
    if nrow_modes == 0 || nrow_modes == d {
        return Err(Error::InvalidArgument("row modes must be a nonempty proper subset".into()));
    }
    let dims = x.shape().dims();
    let nrows: usize = (0..d).filter(|&i| is_row[i]).map(|i| dims[i]).product();
    let ncols: usize = (0..d).filter(|&i| !is_row[i]).map(|i| dims[i]).product();
    let mut m = DMatrix::zeros(nrows, ncols);
    for (o, a) in x.shape().indices().enumerate() {
        let (mut r, mut c) = (0, 0);
        for i in 0..d {
            if is_row[i] {
                r = r * dims[i] + a.0[i] - 1;
            } else {
                c = c * dims[i] + a.0[i] - 1;
            }
        }
        m[(r, c)] = x.values[o];
    }
    Ok(m)
}

/// One square matrix per mode, acting by the multilinear (mode-product) action.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeTransform {
    mats: Vec<DMatrix<f64>>,
}

impl ModeTransform {
    pub fn new(mats: Vec<DMatrix<f64>>) -> Result<Self> {
        if let Some(m) = mats.iter().find(|m| !m.is_square()) {
            return Err(Error::InvalidArgument(format!("mode matrix {}x{} is not square", m.nrows(), m.ncols())));
        }
        Ok(Self { mats })
    }

    pub fn identity(shape: &Shape) -> Self {
        Self { mats: shape.dims().iter().map(|&n| DMatrix::identity(n, n)).collect() }
    }

    pub fn matrices(&self) -> &[DMatrix<f64>] {
        &self.mats
    }

    /// Haar-ish random orthogonal matrix per mode (QR of a Gaussian matrix
    /// with the sign of `R`'s diagonal folded in).
    pub fn random_orthogonal(shape: &Shape, rng: &mut impl Rng) -> Self {
        let mats = shape
            .dims()
            .iter()
            .map(|&n| {
                let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
                let qr = g.qr();
                let mut q = qr.q();
                let r = qr.r();
                for j in 0..n {
                    if r[(j, j)] < 0.0 {
                        q.column_mut(j).neg_mut();
                    }
                }
                q
            })
            .collect();
        Self { mats }
    }

    /// Random signed permutation matrix per mode.
    pub fn random_signed_permutation(shape: &Shape, rng: &mut impl Rng) -> Self {
        use rand::seq::SliceRandom;
        let mats = shape
            .dims()
            .iter()
            .map(|&n| {
                let mut perm: Vec<usize> = (0..n).collect();
                perm.shuffle(rng);
                let mut m = DMatrix::zeros(n, n);
                for (i, &p) in perm.iter().enumerate() {
                    m[(i, p)] = if rng.random::<bool>() { 1.0 } else { -1.0 };
                }
                m
            })
            .collect();
        Self { mats }
    }
}

/// `(h_1 ⊗ ... ⊗ h_d) · x`, applied one mode at a time.
pub fn mode_transform(x: &Tensor, t: &ModeTransform) -> Result<Tensor> {
    let dims = x.shape().dims();
    if t.mats.len() != dims.len() {
        return Err(Error::DimensionMismatch(format!(
            "transform has {} modes, tensor has {}",
            t.mats.len(),
            dims.len()
        )));
    }
    for (i, (m, &n)) in t.mats.iter().zip(dims).enumerate() {
        if m.nrows() != n {
            return Err(Error::DimensionMismatch(format!("mode {} matrix is {}x{}, mode size {n}", i + 1, m.nrows(), m.ncols())));
        }
    }
    let mut cur = x.values.clone();
    for (mode, h) in t.mats.iter().enumerate() {
        let n = dims[mode];
        let outer: usize = dims[..mode].iter().product();
        let inner: usize = dims[mode + 1..].iter().product();
        let mut next = vec![0.0; cur.len()];
        for o in 0..outer {
            for i in 0..n {
                for j in 0..n {
                    let hij = h[(i, j)];
                    if hij == 0.0 {
                        continue;
                    }
                    let dst = (o * n + i) * inner;
                    let src = (o * n + j) * inner;
                    for k in 0..inner {
                        next[dst + k] += hij * cur[src + k];
                    }
                }
            }
        }
        cur = next;
    }
    Tensor::new(x.shape.clone(), cur)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(c: &[usize]) -> MultiIndex {
        MultiIndex::from(c)
    }

    #[test]
    fn wedge_vee_examples() {
        assert_eq!(wedge_vee(&mi(&[2, 1]), &mi(&[1, 2])).unwrap(), (mi(&[1, 1]), mi(&[2, 2])));
        assert_eq!(wedge_vee(&mi(&[1, 1]), &mi(&[1, 1])).unwrap(), (mi(&[1, 1]), mi(&[1, 1])));
        assert_eq!(wedge_vee(&mi(&[2, 1, 3]), &mi(&[1, 2, 3])).unwrap(), (mi(&[1, 1, 3]), mi(&[2, 2, 3])));
        assert!(matches!(wedge_vee(&mi(&[1]), &mi(&[1, 2])), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn bar_wedge_vee_examples() {
        let s22 = Shape::new(vec![2, 2]).unwrap();
        let s33 = Shape::new(vec![3, 3]).unwrap();
        assert_eq!(bar_wedge_vee(&mi(&[1, 1]), &mi(&[1, 2]), &s22).unwrap(), (mi(&[2, 1]), mi(&[2, 2])));
        assert_eq!(bar_wedge_vee(&mi(&[1, 2]), &mi(&[2, 1]), &s22).unwrap(), (mi(&[1, 1]), mi(&[2, 2])));
        assert_eq!(bar_wedge_vee(&mi(&[2, 2]), &mi(&[2, 3]), &s33).unwrap(), (mi(&[3, 2]), mi(&[3, 3])));
        assert!(bar_wedge_vee(&mi(&[1, 1]), &mi(&[1]), &s22).is_err());
    }

    #[test]
    fn reduced_pair_examples() {
        let s = Shape::new(vec![2, 2]).unwrap();
        assert!(is_reduced_pair(&mi(&[1, 1]), &mi(&[2, 2]), PairVariant::Standard, &s).unwrap());
        assert!(!is_reduced_pair(&mi(&[1, 2]), &mi(&[2, 1]), PairVariant::Standard, &s).unwrap());
        assert!(!is_reduced_pair(&mi(&[1, 1]), &mi(&[1, 2]), PairVariant::Barred, &s).unwrap());
        assert!(is_reduced_pair(&mi(&[1, 1]), &mi(&[1, 1]), PairVariant::Standard, &s).is_err());
    }

    #[test]
    fn rank1_examples() {
        let t = rank1_tensor(&[vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(t.values(), &[1.0, 0.0, 0.0, 0.0]);
        let t = rank1_tensor(&[vec![1.0, 1.0], vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(t.shape().dims(), &[2, 2, 2]);
        assert!(t.values().iter().all(|&v| v == 1.0));
        let t = rank1_tensor(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(t.values(), &[3.0, 4.0, 6.0, 8.0]);
        assert!(rank1_tensor(&[]).is_err());
        assert!(rank1_tensor(&[vec![1.0], vec![]]).is_err());
    }

    #[test]
    fn residual_examples() {
        let eye = Tensor::new(Shape::new(vec![2, 2]).unwrap(), vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(rank1_residual(&eye), 1.0);
        assert_eq!(rank1_residual(&Tensor::zeros(Shape::new(vec![2, 3, 2]).unwrap())), 0.0);
        let t = rank1_tensor(&[vec![0.3, -1.2, 2.0], vec![4.0, -0.5], vec![1.5, 1.0, -3.0]]).unwrap();
        assert!(rank1_residual(&t) <= 1e-12);
        assert!(!is_rank1(&eye));
        assert!(is_rank1(&t));
    }

    #[test]
    fn random_low_rank_contract() {
        let s = Shape::new(vec![2, 2]).unwrap();
        let t = random_low_rank(&s, 1, TensorKind::Signed, 7).unwrap();
        let c = t.values()[0].abs();
        assert!(c > 0.0);
        assert!(t.values().iter().all(|v| (v.abs() - c).abs() < 1e-15));
        let s3 = Shape::new(vec![3, 2, 4]).unwrap();
        let g = random_low_rank(&s3, 1, TensorKind::Gaussian, 3).unwrap();
        assert!(rank1_residual(&g) <= 1e-10);
        assert_eq!(random_low_rank(&s3, 3, TensorKind::Signed, 11).unwrap(), random_low_rank(&s3, 3, TensorKind::Signed, 11).unwrap());
        assert!(random_low_rank(&s3, 0, TensorKind::Gaussian, 1).is_err());
    }

    #[test]
    fn matricize_examples() {
        let s = Shape::new(vec![2, 2, 2]).unwrap();
        let e = Tensor::basis(s.clone(), &mi(&[1, 1, 1])).unwrap();
        let m = matricize(&e, &[0]).unwrap();
        assert_eq!((m.nrows(), m.ncols()), (2, 4));
        assert_eq!(m[(0, 0)], 1.0);
        assert_eq!(m.iter().filter(|&&v| v != 0.0).count(), 1);

        let x = Tensor::new(Shape::new(vec![2, 3]).unwrap(), vec![1., 2., 3., 4., 5., 6.]).unwrap();
        let m = matricize(&x, &[0]).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 3, &[1., 2., 3., 4., 5., 6.]));
        assert!(matricize(&x, &[]).is_err());
        assert!(matricize(&x, &[0, 1]).is_err());

        let r1 = rank1_tensor(&[vec![1.0, -2.0], vec![0.5, 3.0, 1.0], vec![2.0, 1.0]]).unwrap();
        for rows in [vec![0], vec![1], vec![2], vec![0, 1], vec![0, 2], vec![1, 2]] {
            let sv = matricize(&r1, &rows).unwrap().singular_values();
            let mut sv: Vec<f64> = sv.iter().copied().collect();
            sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
            assert!(sv[1] < 1e-12 * sv[0]);
        }
    }

    #[test]
    fn mode_transform_examples() {
        let s = Shape::new(vec![2, 2]).unwrap();
        let x = Tensor::new(s.clone(), vec![1., 2., 3., 4.]).unwrap();
        assert_eq!(mode_transform(&x, &ModeTransform::identity(&s)).unwrap(), x);

        let e = Tensor::basis(s.clone(), &mi(&[1, 1])).unwrap();
        let flip = ModeTransform::new(vec![DMatrix::from_diagonal(&nalgebra::dvector![-1.0, 1.0]), DMatrix::identity(2, 2)]).unwrap();
        assert_eq!(mode_transform(&e, &flip).unwrap(), e.scaled(-1.0));

        let mut rng = seeded_rng(5);
        let r1 = rank1_tensor(&[vec![1.0, -2.0, 0.5], vec![0.5, 3.0], vec![2.0, 1.0, -1.0]]).unwrap();
        let t = ModeTransform::random_orthogonal(r1.shape(), &mut rng);
        assert!(rank1_residual(&mode_transform(&r1, &t).unwrap()) <= 1e-10);

        // mode-1 product on a matrix is left multiplication
        let h = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 0.0]);
        let t = ModeTransform::new(vec![h.clone(), DMatrix::identity(2, 2)]).unwrap();
        let y = mode_transform(&x, &t).unwrap();
        let expected = &h * DMatrix::from_row_slice(2, 2, x.values());
        assert_eq!(DMatrix::from_row_slice(2, 2, y.values()), expected);
        assert!(mode_transform(&x, &ModeTransform::identity(&Shape::new(vec![3, 2]).unwrap())).is_err());
    }

    #[test]
    fn tensor_json_roundtrip_and_errors() {
        let x = Tensor::from_json(r#"{"shape": [2, 2], "values": [1, 2, 3, 4.5]}"#).unwrap();
        assert_eq!(x.values(), &[1.0, 2.0, 3.0, 4.5]);
        assert_eq!(Tensor::from_json(&x.to_json()).unwrap(), x);
        assert!(Tensor::from_json(r#"{"shape": [2, 2], "values": [1]}"#).is_err());
        assert!(Tensor::from_json(r#"{"shape": [0], "values": []}"#).is_err());
        assert!(Tensor::from_json(r#"{"dims": [2]}"#).is_err());
    }

    #[test]
    fn offsets_are_lexicographic() {
        let s = Shape::new(vec![2, 3, 2]).unwrap();
        let idx: Vec<MultiIndex> = s.indices().collect();
        assert!(idx.windows(2).all(|w| w[0] < w[1]));
        for (o, a) in idx.iter().enumerate() {
            assert_eq!(s.offset(a), o);
        }
        assert_eq!("4, 4,4".parse::<Shape>().unwrap().dims(), &[4, 4, 4]);
        assert!("4,x".parse::<Shape>().is_err());
    }
}
