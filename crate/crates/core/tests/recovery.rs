mod common;

use nalgebra::{DMatrix, DVector};
use thetabody::groebner::{build_groebner, parse_polynomial, NormExponent};
use thetabody::recovery::*;
use thetabody::solver::SolverSettings;
use thetabody::tensor::*;

const TWO: NormExponent = NormExponent::Even(2);
const INF: NormExponent = NormExponent::Infinity;

fn shape(d: &[usize]) -> Shape {
    Shape::new(d.to_vec()).unwrap()
}

fn norm(x: &Tensor, p: NormExponent) -> f64 {
    theta_norm(x, p, 1, &SolverSettings::default()).unwrap()
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}

/// Every `±1` tensor of rank one (outer products of sign vectors), once each.
fn sign_vertices(dims: &[usize]) -> Vec<Vec<f64>> {
    let idx = common::multi_indices(dims);
    let free: usize = dims.iter().sum();
    let mut out = std::collections::BTreeSet::new();
    for mask in 0u64..(1 << free) {
        let mut start = 0;
        let factors: Vec<Vec<f64>> = dims
            .iter()
            .map(|&n| {
                let f = (0..n).map(|i| if mask >> (start + i) & 1 == 1 { -1.0 } else { 1.0 }).collect();
                start += n;
                f
            })
            .collect();
        let v: Vec<i8> = idx.iter().map(|a| a.iter().enumerate().map(|(m, &i)| factors[m][i - 1]).product::<f64>() as i8).collect();
        out.insert(v);
    }
    out.into_iter().map(|v| v.into_iter().map(f64::from).collect()).collect()
}

/// Gauge of `conv(V(I_inf))` at `x`: `min Σ λ_v  s.t.  Σ λ_v v = x, λ >= 0`.
fn sign_gauge(x: &Tensor) -> f64 {
    let verts = sign_vertices(x.shape().dims());
    let n = x.shape().len();
    let a: Vec<Vec<f64>> = (0..n).map(|i| verts.iter().map(|v| v[i]).collect()).collect();
    common::lp_min(&a, x.values(), &vec![1.0; verts.len()]).unwrap()
}

#[test]
fn theta_norm_examples() {
    let s = shape(&[2, 2, 2]);
    assert!(norm(&Tensor::zeros(s.clone()), INF).abs() <= 1e-6);
    let ones = Tensor::filled(s.clone(), 1.0);
    assert!(rel_close(norm(&ones, INF), 1.0, 1e-4));
    assert!(rel_close(norm(&ones, TWO), 8f64.sqrt(), 1e-4));
    assert!(theta_norm(&ones, NormExponent::Even(4), 1, &SolverSettings::default()).is_err());
    assert!(theta_norm(&ones, TWO, 0, &SolverSettings::default()).is_err());
}

#[test]
fn one_norm_body_is_the_l1_ball() {
    let mut rng = seeded_rng(31);
    for d in [&[3][..], &[2, 2], &[2, 3], &[2, 2, 2]] {
        let x = random_gaussian(&shape(d), &mut rng);
        let l1: f64 = x.values().iter().map(|v| v.abs()).sum();
        let got = theta_norm(&x, NormExponent::One, 1, &SolverSettings::default()).unwrap();
        assert!((got - l1).abs() <= 1e-4 * (1.0 + l1), "{d:?}: {got} vs {l1}");
    }
}

#[test]
fn matrix_bodies_give_the_nuclear_norm() {
    let mut rng = seeded_rng(32);
    for d in [&[2, 2][..], &[2, 3], &[3, 3], &[4, 2], &[4, 4]] {
        let x = random_gaussian(&shape(d), &mut rng);
        let m = DMatrix::from_row_slice(d[0], d[1], x.values());
        let nuclear: f64 = common::singular_values(&m).iter().sum();
        assert!(rel_close(norm(&x, TWO), nuclear, 1e-4), "{d:?}");
    }
}

#[test]
fn norm_axioms_on_random_pairs() {
    let mut rng = seeded_rng(33);
    for d in [&[2, 2][..], &[2, 2, 2]] {
        let s = shape(d);
        for p in [TWO, INF] {
            let layout = layout_for(&s, p, 1).unwrap();
            let nv = |x: &Tensor| theta_norm_on(&layout, x, &SolverSettings::default()).unwrap().0;
            for _ in 0..25 {
                let x = random_gaussian(&s, &mut rng);
                let y = random_gaussian(&s, &mut rng);
                let (a, b) = (nv(&x), nv(&y));
                assert!(nv(&x.combine(1.0, &y, 1.0).unwrap()) <= a + b + 1e-4, "{d:?} {p}");
                assert!(rel_close(nv(&x.scaled(-3.0)), 3.0 * a, 1e-4));
            }
        }
    }
}

#[test]
fn sandwich_below_the_sign_polytope_gauge() {
    let mut rng = seeded_rng(34);
    for d in [&[2, 2][..], &[2, 3], &[2, 2, 2]] {
        let s = shape(d);
        for _ in 0..5 {
            let x = random_gaussian(&s, &mut rng);
            let exact = sign_gauge(&x);
            let theta = norm(&x, INF);
            assert!(theta <= exact + 1e-4 * (1.0 + exact), "{d:?}: {theta} > {exact}");
        }
        // on a vertex the two agree
        let v = random_low_rank(&s, 1, TensorKind::Signed, 7).unwrap();
        let v = v.scaled(1.0 / v.values()[0].abs());
        assert!(common::close(sign_gauge(&v), 1.0, 1e-9));
    }
    assert_eq!(sign_vertices(&[2, 2]).len(), 8);
    assert_eq!(sign_vertices(&[2, 2, 2]).len(), 16);
}

#[test]
fn invariance_under_mode_symmetries() {
    let mut rng = seeded_rng(35);
    for d in [&[2, 2][..], &[2, 3], &[2, 2, 2]] {
        let s = shape(d);
        for _ in 0..3 {
            let x = random_gaussian(&s, &mut rng);
            let q = ModeTransform::random_orthogonal(&s, &mut rng);
            let (a, b) = (norm(&x, TWO), norm(&mode_transform(&x, &q).unwrap(), TWO));
            assert!((a - b).abs() <= 1e-4 * (1.0 + a), "{d:?} orthogonal: {a} vs {b}");
            let sp = ModeTransform::random_signed_permutation(&s, &mut rng);
            let (a, b) = (norm(&x, INF), norm(&mode_transform(&x, &sp).unwrap(), INF));
            assert!((a - b).abs() <= 1e-4 * (1.0 + a), "{d:?} signed permutation: {a} vs {b}");
        }
    }
}

#[test]
fn rank1_points_are_extreme() {
    let mut seeds = seeded_rng(36);
    for d in [&[2, 2][..], &[3, 2], &[2, 2, 2], &[3, 3, 3]] {
        let s = shape(d);
        for _ in 0..2 {
            let g = random_low_rank(&s, 1, TensorKind::Gaussian, rand::Rng::random(&mut seeds)).unwrap();
            assert!(rel_close(norm(&g.scaled(1.0 / g.frobenius_norm()), TWO), 1.0, 1e-4), "{d:?}");
            let v = random_low_rank(&s, 1, TensorKind::Signed, rand::Rng::random(&mut seeds)).unwrap();
            assert!(rel_close(norm(&v.scaled(1.0 / v.values()[0].abs()), INF), 1.0, 1e-4), "{d:?}");
        }
    }
}

#[test]
fn full_measurements_give_the_linear_solution() {
    let s = shape(&[2, 3]);
    let truth = random_gaussian(&s, &mut seeded_rng(40));
    let ens = MeasurementEnsemble::gaussian(&truth, s.len(), 41).unwrap();
    let a = DMatrix::from_fn(s.len(), s.len(), |i, j| ens.measurements()[i].0.values()[j]);
    let b = DVector::from_iterator(s.len(), ens.measurements().iter().map(|m| m.1));
    let direct = a.lu().solve(&b).unwrap();
    for p in [TWO, INF] {
        let r = recover(&ens, p, 1, Some(&truth), &SolverSettings::default().with_eps(1e-9)).unwrap();
        let x = r.recovered.values();
        let err = x.iter().zip(direct.iter()).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt() / direct.norm();
        assert!(err < 1e-6, "{p}: {err}");
        assert!(r.success == Some(true));
    }
}

#[test]
fn signed_truth_is_recovered_with_few_infinity_measurements() {
    let s = shape(&[4, 4, 4]);
    let ones = Tensor::filled(s.clone(), 1.0);
    let ens = MeasurementEnsemble::gaussian(&ones, 30, 2024).unwrap();
    let r = recover(&ens, INF, 1, Some(&ones), &SolverSettings::default()).unwrap();
    assert_eq!(r.success, Some(true), "{:?}", r.rel_error);

    let g = random_low_rank(&s, 1, TensorKind::Gaussian, 5).unwrap();
    let ens = MeasurementEnsemble::gaussian(&g, 32, 6).unwrap();
    let r = recover(&ens, INF, 1, Some(&g), &SolverSettings::default()).unwrap();
    assert_eq!(r.success, Some(false), "{:?}", r.rel_error);
}

#[test]
fn measurement_pools_nest() {
    let s = shape(&[2, 3]);
    let truth = random_gaussian(&s, &mut seeded_rng(1));
    let ens = MeasurementEnsemble::gaussian(&truth, 5, 9).unwrap();
    for (a, b) in ens.measurements() {
        assert!((a.dot(&truth).unwrap() - b).abs() <= 1e-12 * (1.0 + b.abs()));
    }
    let pre = ens.prefix(3).unwrap();
    assert_eq!(pre.measurements(), &ens.measurements()[..3]);
    assert!(ens.prefix(6).is_err());
    assert_eq!(MeasurementEnsemble::gaussian(&truth, 5, 9).unwrap(), ens);
}

#[test]
fn certify_examples_and_witnesses() {
    let s = shape(&[2, 2]);
    let st = certify_settings();
    let cases = [("1 + x[1,1]", INF, true), ("1 + 2*x[1,1]", INF, false), ("1 - x[1,1]", TWO, true)];
    for (src, p, feasible) in cases {
        let f = parse_polynomial(src, &s).unwrap();
        let g = build_groebner(&s, Some(p)).unwrap();
        match certify_sos(&f, &s, p, 1, &st).unwrap() {
            Certificate::Feasible(w) => {
                assert!(feasible, "{src}");
                assert!(w.max_deviation(&f, &g) <= 1e-6, "{src}");
                assert!(w.min_eigenvalue() >= -1e-8);
            }
            Certificate::Infeasible => assert!(!feasible, "{src}"),
            Certificate::Undecided(d) => panic!("{src}: {d:?}"),
        }
    }
    let cubic = parse_polynomial("x[1,1]*x[1,2]*x[2,2]", &s).unwrap();
    assert!(certify_sos(&cubic, &s, TWO, 1, &st).is_err());
}

fn config(plan: MeasurementPlan, trials: usize) -> ExperimentConfig {
    ExperimentConfig {
        shape: shape(&[3, 3, 3]),
        rank: 1,
        rank_up_to: false,
        kind: TensorKind::Gaussian,
        norms: vec![TWO],
        k: 1,
        plan,
        trials,
        seed: 77,
        settings: SolverSettings::default(),
    }
}

#[test]
fn experiments_are_reproducible_and_empty_when_asked() {
    assert_eq!(run_recovery_experiment(&config(MeasurementPlan::Sweep(vec![5]), 0)).unwrap(), ExperimentResult::default());
    let cfg = config(MeasurementPlan::Sweep(vec![8, 16]), 3);
    let strip = |r: ExperimentResult| r.rows.into_iter().map(|row| ExperimentRow { time_ms: 0.0, ..row }).collect::<Vec<_>>();
    let a = strip(run_recovery_experiment(&cfg).unwrap());
    assert_eq!(a.len(), 6);
    assert_eq!(a.iter().map(|r| (r.trial, r.m)).collect::<Vec<_>>(), vec![(0, 8), (0, 16), (1, 8), (1, 16), (2, 8), (2, 16)]);
    assert_eq!(format!("{a:?}"), format!("{:?}", strip(run_recovery_experiment(&cfg).unwrap())));
    assert!(run_recovery_experiment(&config(MeasurementPlan::Search { lo: 5, hi: 28 }, 1)).is_err());
}

#[test]
fn minimal_m_retest_with_five_more() {
    let cfg = config(MeasurementPlan::Search { lo: 1, hi: 27 }, 10);
    let res = run_recovery_experiment(&cfg).unwrap();
    let layout = layout_for(&cfg.shape, TWO, 1).unwrap();
    let (mut ok, mut total) = (0, 0);
    for mm in &res.minimal {
        let Some(m) = mm.m else { continue };
        // the search itself recorded a success at m
        assert!(res.rows.iter().any(|r| r.trial == mm.trial && r.m == m && r.success));
        let (truth, _, pool) = trial_instance(&cfg, mm.trial).unwrap();
        let ens = pool.prefix((m + 5).min(cfg.shape.len())).unwrap();
        total += 1;
        if recover_on(&layout, &ens, Some(&truth), &cfg.settings).unwrap().success == Some(true) {
            ok += 1;
        }
    }
    assert!(total >= 9 && ok * 10 >= total * 9, "{ok}/{total}");
}
