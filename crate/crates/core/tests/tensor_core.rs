mod common;

use proptest::prelude::*;
use thetabody::tensor::*;

fn shape(d: &[usize]) -> Shape {
    Shape::new(d.to_vec()).unwrap()
}

/// `max_{a,b} |x_a x_b - x_{a∧b} x_{a∨b}|` over all pairs, by enumeration.
fn residual_oracle(dims: &[usize], v: &[f64]) -> f64 {
    let idx = common::multi_indices(dims);
    let mut worst = 0.0f64;
    for a in &idx {
        for b in &idx {
            let lo: Vec<usize> = a.iter().zip(b).map(|(x, y)| *x.min(y)).collect();
            let hi: Vec<usize> = a.iter().zip(b).map(|(x, y)| *x.max(y)).collect();
            let o = |i: &[usize]| v[common::offset(dims, i)];
            worst = worst.max((o(a) * o(b) - o(&lo) * o(&hi)).abs());
        }
    }
    worst
}

#[test]
fn rank1_residual_matches_enumeration() {
    let s = shape(&[2, 3, 2]);
    let mut rng = seeded_rng(3);
    for _ in 0..10 {
        let x = random_gaussian(&s, &mut rng);
        let want = residual_oracle(s.dims(), x.values());
        assert!((rank1_residual(&x) - want).abs() <= 1e-12 * want.max(1.0), "{} vs {want}", rank1_residual(&x));
    }
    let id = Tensor::new(shape(&[2, 2]), vec![1.0, 0.0, 0.0, 1.0]).unwrap();
    assert_eq!(rank1_residual(&id), 1.0);
    assert_eq!(rank1_residual(&Tensor::zeros(shape(&[3, 2]))), 0.0);
}

#[test]
fn rank1_tensor_examples() {
    let t = rank1_tensor(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
    assert_eq!(t.values(), &[3.0, 4.0, 6.0, 8.0]);
    let ones = rank1_tensor(&[vec![1.0; 2], vec![1.0; 2], vec![1.0; 2]]).unwrap();
    assert_eq!(ones, Tensor::filled(shape(&[2, 2, 2]), 1.0));
    assert!(rank1_tensor(&[]).is_err());
    assert!(rank1_tensor(&[vec![1.0], vec![]]).is_err());
}

#[test]
fn matricize_splits_of_rank1_are_rank1() {
    let x = rank1_tensor(&[vec![1.0, -2.0], vec![0.5, 1.0, 3.0], vec![2.0, 1.0]]).unwrap();
    for rows in [vec![0], vec![1], vec![2], vec![0, 1], vec![0, 2], vec![1, 2]] {
        let m = matricize(&x, &rows).unwrap();
        let sv = common::singular_values(&m);
        assert!(sv[1] <= 1e-12 * sv[0], "{rows:?}: {sv:?}");
    }
    let e = Tensor::basis(shape(&[2, 2, 2]), &MultiIndex::new(vec![1, 1, 1])).unwrap();
    let m = matricize(&e, &[0]).unwrap();
    assert_eq!((m.nrows(), m.ncols()), (2, 4));
    assert_eq!(m.iter().filter(|&&v| v != 0.0).count(), 1);
    assert_eq!(m[(0, 0)], 1.0);
    assert!(matricize(&e, &[]).is_err());
    assert!(matricize(&e, &[0, 1, 2]).is_err());
}

#[test]
fn signed_rank1_has_one_magnitude() {
    for seed in 0..5 {
        let x = random_low_rank(&shape(&[2, 2]), 1, TensorKind::Signed, seed).unwrap();
        let c = x.values()[0].abs();
        assert!(c > 0.0);
        assert!(x.values().iter().all(|v| v.abs() == c));
    }
}

#[test]
fn mode_transform_sign_flip() {
    let s = shape(&[2, 2]);
    let e = Tensor::basis(s.clone(), &MultiIndex::new(vec![1, 1])).unwrap();
    let flip = nalgebra::DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]);
    let t = ModeTransform::new(vec![flip, nalgebra::DMatrix::identity(2, 2)]).unwrap();
    assert_eq!(mode_transform(&e, &t).unwrap(), e.scaled(-1.0));
    assert_eq!(mode_transform(&e, &ModeTransform::identity(&s)).unwrap(), e);
}

fn small_shape() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..=3, 1..=3)
}

fn index_pair() -> impl Strategy<Value = (Vec<usize>, Vec<usize>, Vec<usize>)> {
    small_shape().prop_flat_map(|dims| {
        let coord = dims.iter().map(|&n| 1..=n).collect::<Vec<_>>();
        (Just(dims), coord.clone(), coord)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn wedge_vee_is_componentwise_sort((_dims, a, b) in index_pair()) {
        let (lo, hi) = wedge_vee(&MultiIndex::new(a.clone()), &MultiIndex::new(b.clone())).unwrap();
        for i in 0..a.len() {
            prop_assert_eq!(lo.0[i], a[i].min(b[i]));
            let mut pair = [a[i], b[i]];
            pair.sort();
            prop_assert_eq!([lo.0[i], hi.0[i]], pair);
        }
    }

    #[test]
    fn bar_wedge_vee_rule((dims, a, b) in index_pair()) {
        let s = Shape::new(dims.clone()).unwrap();
        let (lo, hi) = bar_wedge_vee(&MultiIndex::new(a.clone()), &MultiIndex::new(b.clone()), &s).unwrap();
        for i in 0..a.len() {
            if a[i] == b[i] {
                prop_assert_eq!((lo.0[i], hi.0[i]), (dims[i], dims[i]));
            } else {
                prop_assert_eq!((lo.0[i], hi.0[i]), (a[i].min(b[i]), a[i].max(b[i])));
            }
        }
    }

    #[test]
    fn rank1_of_bounded_factors_has_tiny_residual(
        f in small_shape().prop_flat_map(|d| d.into_iter().map(|n| prop::collection::vec(-10.0f64..10.0, n)).collect::<Vec<_>>())
    ) {
        let x = rank1_tensor(&f).unwrap();
        prop_assert!(rank1_residual(&x) <= 1e-10 * x.max_abs().powi(2).max(1.0));
    }

    #[test]
    fn orthogonal_transforms_keep_rank1(seed in any::<u64>(), dims in small_shape()) {
        let s = Shape::new(dims).unwrap();
        let x = random_low_rank(&s, 1, TensorKind::Gaussian, seed).unwrap();
        let t = ModeTransform::random_orthogonal(&s, &mut seeded_rng(seed ^ 1));
        for m in t.matrices() {
            let e = (m.transpose() * m - nalgebra::DMatrix::identity(m.nrows(), m.nrows())).abs().max();
            prop_assert!(e <= 1e-10);
        }
        let y = mode_transform(&x, &t).unwrap();
        prop_assert!(rank1_residual(&y) <= 1e-8);
        prop_assert!((y.frobenius_norm() - x.frobenius_norm()).abs() <= 1e-10 * x.frobenius_norm().max(1.0));
    }

    #[test]
    fn matricize_is_linear(seed in any::<u64>(), alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
        let s = shape(&[2, 3, 2]);
        let mut rng = seeded_rng(seed);
        let x = random_gaussian(&s, &mut rng);
        let y = random_gaussian(&s, &mut rng);
        let lhs = matricize(&x.combine(alpha, &y, beta).unwrap(), &[0, 2]).unwrap();
        let rhs = matricize(&x, &[0, 2]).unwrap() * alpha + matricize(&y, &[0, 2]).unwrap() * beta;
        prop_assert!((lhs - rhs).abs().max() <= 1e-12);
    }

    #[test]
    fn random_low_rank_is_reproducible(seed in any::<u64>(), r in 1usize..4, signed in any::<bool>()) {
        let kind = if signed { TensorKind::Signed } else { TensorKind::Gaussian };
        let s = shape(&[3, 2, 2]);
        let a = random_low_rank(&s, r, kind, seed).unwrap();
        let b = random_low_rank(&s, r, kind, seed).unwrap();
        prop_assert_eq!(a.values(), b.values());
    }

    #[test]
    fn tensor_file_round_trip(seed in any::<u64>(), dims in small_shape()) {
        let s = Shape::new(dims).unwrap();
        let x = random_gaussian(&s, &mut seeded_rng(seed));
        prop_assert_eq!(Tensor::from_json(&x.to_json()).unwrap(), x);
    }
}
