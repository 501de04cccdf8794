//! Projection onto the positive semidefinite cone.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::conic::svec_len;
use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;

/// Nearest positive semidefinite matrix in Frobenius norm: negative
/// eigenvalues are clipped to zero.
pub fn project_psd(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !s.is_square() {
        return Err(Error::DimensionMismatch(format!("matrix is {}x{}", s.nrows(), s.ncols())));
    }
    let n = s.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            let d = (s[(i, j)] - s[(j, i)]).abs();
            if d > SYMMETRY_TOL * (1.0 + s[(i, j)].abs()) {
                return Err(Error::InvalidArgument(format!("matrix is not symmetric: |S[{i},{j}] - S[{j},{i}]| = {d:e}")));
            }
        }
    }
    let mut sym = s.clone();
    for j in 0..n {
        for i in (j + 1)..n {
            let v = 0.5 * (s[(i, j)] + s[(j, i)]);
            sym[(i, j)] = v;
            sym[(j, i)] = v;
        }
    }
    Ok(project_sym(sym))
}

fn project_sym(sym: DMatrix<f64>) -> DMatrix<f64> {
    let n = sym.nrows();
    let eig = SymmetricEigen::new(sym.clone());
    let pos = eig.eigenvalues.iter().filter(|&&l| l > 0.0).count();
    if pos == n {
        return sym;
    }
    if pos == 0 {
        return DMatrix::zeros(n, n);
    }
    // Assemble from whichever side of the spectrum is smaller.
    let keep_pos = pos <= n - pos;
    let idx: Vec<usize> = (0..n).filter(|&i| (eig.eigenvalues[i] > 0.0) == keep_pos).collect();
    let mut w = DMatrix::zeros(n, idx.len());
    for (c, &i) in idx.iter().enumerate() {
        let f = eig.eigenvalues[i].abs().sqrt();
        w.set_column(c, &(eig.eigenvectors.column(i) * f));
    }
    let part = &w * w.transpose();
    if keep_pos {
        part
    } else {
        sym + part
    }
}

/// Symmetric matrix from its scaled lower-triangle vectorization.
pub fn smat(n: usize, v: &[f64]) -> DMatrix<f64> {
    debug_assert_eq!(v.len(), svec_len(n));
    let mut m = DMatrix::zeros(n, n);
    let mut k = 0;
    for j in 0..n {
        m[(j, j)] = v[k];
        k += 1;
        for i in (j + 1)..n {
            let x = v[k] * std::f64::consts::FRAC_1_SQRT_2;
            m[(i, j)] = x;
            m[(j, i)] = x;
            k += 1;
        }
    }
    m
}

/// Scaled lower-triangle vectorization, written into `out`.
pub fn svec_into(m: &DMatrix<f64>, out: &mut [f64]) {
    let n = m.nrows();
    let mut k = 0;
    for j in 0..n {
        out[k] = m[(j, j)];
        k += 1;
        for i in (j + 1)..n {
            out[k] = m[(i, j)] * std::f64::consts::SQRT_2;
            k += 1;
        }
    }
}

pub fn svec(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = vec![0.0; svec_len(m.nrows())];
    svec_into(m, &mut out);
    out
}

/// Projects a vectorized block in place.
pub(crate) fn project_svec(n: usize, v: &mut [f64]) {
    match n {
        0 => {}
        1 => v[0] = v[0].max(0.0),
        _ => {
            let p = project_sym(smat(n, v));
            svec_into(&p, v);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn clipping_examples() {
        let p = project_psd(&DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, -2.0])).unwrap();
        assert!((p - DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 0.0])).amax() < 1e-14);
        let p = project_psd(&DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        assert!((p - DMatrix::from_element(2, 2, 0.5)).amax() < 1e-14);
        let psd = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0]);
        assert!((project_psd(&psd).unwrap() - &psd).amax() < 1e-10);
    }

    #[test]
    fn rejects_asymmetric() {
        assert!(project_psd(&DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1e-6, 1.0])).is_err());
        assert!(project_psd(&DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn svec_roundtrip_is_isometric() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 5.0, 3.0, 5.0, 6.0]);
        let v = svec(&m);
        assert!((smat(3, &v) - &m).amax() < 1e-15);
        let fro2: f64 = m.iter().map(|x| x * x).sum();
        let v2: f64 = v.iter().map(|x| x * x).sum();
        assert!((fro2 - v2).abs() < 1e-12);
    }

    fn sym_matrix() -> impl Strategy<Value = DMatrix<f64>> {
        (1usize..7).prop_flat_map(|n| {
            proptest::collection::vec(-10.0f64..10.0, n * n).prop_map(move |v| {
                let a = DMatrix::from_vec(n, n, v);
                (&a + a.transpose()) * 0.5
            })
        })
    }

    proptest! {
        #[test]
        fn idempotent(s in sym_matrix()) {
            let p = project_psd(&s).unwrap();
            let pp = project_psd(&p).unwrap();
            prop_assert!((pp - &p).amax() < 1e-10);
        }

        #[test]
        fn moreau_decomposition(s in sym_matrix()) {
            let p = project_psd(&s).unwrap();
            let q = project_psd(&(-&s)).unwrap();
            prop_assert!((&p - &q - &s).amax() < 1e-10);
            prop_assert!(p.dot(&q).abs() < 1e-10 * (1.0 + s.norm_squared()));
        }
    }
}
