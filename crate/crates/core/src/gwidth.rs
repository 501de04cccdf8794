//! Normal-cone index sets at the canonical rank-1 point, the gauge of the
//! cone section `N_I`, and Monte-Carlo estimates of the resulting bound on
//! the number of measurements.

use std::collections::HashMap;
use std::time::Instant;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conic::{svec_len, Affine, ConicProblem};
use crate::error::{Error, Result};
use crate::groebner::{coeff_from_f64, Monomial, NormExponent, Polynomial};
use crate::moment::{face_gram_program, theta1_closed_form, MomentLayout};
use crate::recovery::Diagnostics;
use crate::solver::{solve, ConicSolution, Observer, SolveStatus, SolverSettings};
use crate::tensor::{derive_seed, seeded_rng, MultiIndex, Shape};

/// Partition of the index set around the anchor `a0 = (1, ..., 1)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConeIndexSets {
    pub anchor: MultiIndex,
    /// indices with exactly one coordinate different from 1
    pub i0: Vec<MultiIndex>,
    /// everything else
    pub rest: Vec<MultiIndex>,
}

pub fn index_sets(shape: &Shape) -> ConeIndexSets {
    let mut i0 = Vec::new();
    let mut rest = Vec::new();
    for a in shape.indices() {
        match a.0.iter().filter(|&&c| c != 1).count() {
            0 => {}
            1 => i0.push(a),
            _ => rest.push(a),
        }
    }
    ConeIndexSets { anchor: shape.first_index(), i0, rest }
}

/// `r + r x_{a0} + <g_I, x_I>`.
pub fn gauge_polynomial(shape: &Shape, sets: &ConeIndexSets, r: f64, g_i: &[f64]) -> Result<Polynomial> {
    if g_i.len() != sets.rest.len() {
        return Err(Error::DimensionMismatch(format!("g_I has {} entries, I has {}", g_i.len(), sets.rest.len())));
    }
    let mut f = Polynomial::constant(coeff_from_f64(r)?);
    f.add_term(Monomial::var(shape.offset(&sets.anchor)), coeff_from_f64(r)?);
    for (b, &g) in sets.rest.iter().zip(g_i) {
        f.add_term(Monomial::var(shape.offset(b)), coeff_from_f64(g)?);
    }
    Ok(f)
}

/// Program whose optimal value is the gauge: minimal `r` with
/// `r + r x_{a0} + <g_I, x_I>` a sum of squares of affine functions modulo
/// `I_2`, on a precomputed first-order `I_2` layout. Returns the problem and
/// the index of `r`.
///
/// Every such polynomial vanishes at `-e_{a0}`, so the squares are taken of
/// affine functions vanishing there: `1 + x_{a0}` and `x_b` for `b != a0`.
/// Without this restriction the Gram matrix has no interior point and the
/// solver crawls.
pub fn gauge_program(layout: &MomentLayout, sets: &ConeIndexSets, g_i: &[f64]) -> Result<(ConicProblem, usize)> {
    let shape = layout.shape();
    if g_i.len() != sets.rest.len() {
        return Err(Error::DimensionMismatch(format!("g_I has {} entries, I has {}", g_i.len(), sets.rest.len())));
    }
    if g_i.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("g_I must be finite".into()));
    }
    let a0 = shape.offset(&sets.anchor);
    let pos = |v: usize| layout.linear_position(v).ok_or_else(|| Error::InvalidArgument("layout lacks x_v".into()));
    let one = layout.basis().position(&Monomial::one()).ok_or_else(|| Error::InvalidArgument("layout lacks 1".into()))?;
    let mut rows = vec![vec![(one, 1.0), (pos(a0)?, 1.0)]];
    for v in (0..shape.len()).filter(|&v| v != a0) {
        rows.push(vec![(pos(v)?, 1.0)]);
    }
    let r = svec_len(rows.len());
    let slot = |m: Monomial| layout.slot_of(&m).ok_or_else(|| Error::InvalidArgument("layout lacks a slot".into()));
    let mut target: HashMap<usize, Affine> = HashMap::new();
    target.insert(slot(Monomial::one())?, Affine::var(r));
    target.insert(slot(Monomial::var(a0))?, Affine::var(r));
    for (b, &g) in sets.rest.iter().zip(g_i) {
        target.insert(slot(Monomial::var(shape.offset(b)))?, Affine::constant(g));
    }
    Ok((face_gram_program(layout, &rows, &target, &[], 1, &[(r, 1.0)])?, r))
}

/// Solves [`gauge_program`]; returns `γ_{N_I}(g_I)` and the raw solution.
pub fn gauge_ni_on(
    layout: &MomentLayout,
    sets: &ConeIndexSets,
    g_i: &[f64],
    settings: &SolverSettings,
) -> Result<(f64, ConicSolution)> {
    gauge_observed(layout, sets, g_i, settings, &|_, _| {})
}

fn gauge_observed(
    layout: &MomentLayout,
    sets: &ConeIndexSets,
    g_i: &[f64],
    settings: &SolverSettings,
    observe: Observer,
) -> Result<(f64, ConicSolution)> {
    let (problem, r) = gauge_program(layout, sets, g_i)?;
    let sol = solve(&problem, settings)?;
    observe(&problem, &sol);
    if sol.status != SolveStatus::Optimal {
        return Err(Error::Solver(format!(
            "gauge: status {} after {} iterations (residuals {:.2e}/{:.2e}/{:.2e})",
            sol.status, sol.iterations, sol.residuals.primal, sol.residuals.dual, sol.residuals.gap
        )));
    }
    Ok((sol.x[r].max(0.0), sol))
}

/// The first-order `I_2` layout the gauge is computed on.
pub fn gauge_layout(shape: &Shape) -> Result<MomentLayout> {
    theta1_closed_form(shape, NormExponent::Even(2))
}

/// `γ_{N_I}(g_I)`.
pub fn gauge_ni(g_i: &[f64], shape: &Shape, settings: &SolverSettings) -> Result<f64> {
    let layout = gauge_layout(shape)?;
    gauge_ni_on(&layout, &index_sets(shape), g_i, settings).map(|r| r.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidthSample {
    pub sample: usize,
    pub gamma_sq: f64,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidthEstimate {
    pub shape: Shape,
    pub i0_len: usize,
    pub samples: Vec<WidthSample>,
    pub mean_gamma_sq: f64,
    pub stderr_gamma_sq: f64,
    /// `|I_0| + 1 + mean γ²`
    pub bound_mean: f64,
}

/// Standard-normal `g_I` of sample `s`.
pub fn sample_g(sets: &ConeIndexSets, seed: u64, s: usize) -> Vec<f64> {
    let mut rng = seeded_rng(derive_seed(seed, s as u64));
    (0..sets.rest.len()).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Averages `γ_{N_I}(g_I)²` over `samples` Gaussian draws.
pub fn estimate_width_bound(
    shape: &Shape,
    samples: usize,
    seed: u64,
    settings: &SolverSettings,
) -> Result<WidthEstimate> {
    estimate_width_bound_observed(shape, samples, seed, settings, &|_, _| {})
}

/// [`estimate_width_bound`], handing every solve to `observe`.
pub fn estimate_width_bound_observed(
    shape: &Shape,
    samples: usize,
    seed: u64,
    settings: &SolverSettings,
    observe: Observer,
) -> Result<WidthEstimate> {
    if samples < 1 {
        return Err(Error::InvalidArgument("at least one sample is needed".into()));
    }
    let layout = gauge_layout(shape)?;
    let sets = index_sets(shape);
    let draws: Vec<Result<WidthSample>> = (0..samples)
        .into_par_iter()
        .map(|s| {
            let start = Instant::now();
            let g = sample_g(&sets, seed, s);
            let (gamma, sol) = gauge_observed(&layout, &sets, &g, settings, observe)?;
            let diagnostics = Diagnostics {
                status: sol.status,
                iterations: sol.iterations,
                residuals: sol.residuals,
                time_ms: start.elapsed().as_secs_f64() * 1e3,
            };
            Ok(WidthSample { sample: s, gamma_sq: gamma * gamma, diagnostics })
        })
        .collect();
    let samples: Vec<WidthSample> = draws.into_iter().collect::<Result<_>>()?;
    let vals: Vec<f64> = samples.iter().map(|s| s.gamma_sq).collect();
    let mean = pairwise_sum(&vals) / vals.len() as f64;
    let stderr = if vals.len() > 1 {
        let dev: Vec<f64> = vals.iter().map(|v| (v - mean) * (v - mean)).collect();
        (pairwise_sum(&dev) / (vals.len() - 1) as f64).sqrt() / (vals.len() as f64).sqrt()
    } else {
        0.0
    };
    Ok(WidthEstimate {
        shape: shape.clone(),
        i0_len: sets.i0.len(),
        samples,
        mean_gamma_sq: mean,
        stderr_gamma_sq: stderr,
        bound_mean: sets.i0.len() as f64 + 1.0 + mean,
    })
}

fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        v.iter().sum()
    } else {
        let (a, b) = v.split_at(v.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}
