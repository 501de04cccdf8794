//! Theta-norm evaluation, recovery from linear measurements, sum of squares
//! certificates and batch recovery experiments.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conic::{svec_len, ConicProblem};
use crate::error::{Error, Result};
use crate::groebner::{build_groebner, reduce, GroebnerBasis, Monomial, NormExponent, Polynomial};
use crate::moment::{
    assemble_norm_sdp, assemble_recovery_sdp, build_moment_layout, linear_part, target_of, theta1_closed_form,
    gram_program, MomentLayout,
};
use crate::solver::{smat, solve, ConicSolution, Observer, Residuals, SolveStatus, SolverSettings};
use crate::tensor::{derive_seed, random_gaussian, random_low_rank, seeded_rng, Shape, Tensor, TensorKind};

/// Relative Frobenius error below which a recovery counts as successful.
pub const SUCCESS_THRESHOLD: f64 = 1e-3;

/// Moment layout of the degree-`k` theta body of `I_p`.
pub fn layout_for(shape: &Shape, p: NormExponent, k: u32) -> Result<MomentLayout> {
    if k == 0 {
        return Err(Error::InvalidArgument("relaxation order k must be at least 1".into()));
    }
    if p.degree() > 2 * k {
        return Err(Error::InvalidArgument(format!("p = {p} needs 2k >= {}, got k = {k}", p.degree())));
    }
    match (p, k) {
        (NormExponent::Even(2) | NormExponent::Infinity, 1) => theta1_closed_form(shape, p),
        _ => build_moment_layout(&build_groebner(shape, Some(p))?, k),
    }
}

/// Solver outcome summary attached to results.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub status: SolveStatus,
    pub iterations: usize,
    pub residuals: Residuals,
    pub time_ms: f64,
}

impl Diagnostics {
    fn new(sol: &ConicSolution, start: Instant) -> Self {
        Self {
            status: sol.status,
            iterations: sol.iterations,
            residuals: sol.residuals,
            time_ms: start.elapsed().as_secs_f64() * 1e3,
        }
    }
}

fn require_optimal(sol: &ConicSolution, what: &str) -> Result<()> {
    if sol.is_optimal() {
        Ok(())
    } else {
        Err(Error::Solver(format!(
            "{what}: status {} after {} iterations (residuals {:.2e}/{:.2e}/{:.2e})",
            sol.status, sol.iterations, sol.residuals.primal, sol.residuals.dual, sol.residuals.gap
        )))
    }
}

/// Gauge of the theta body on a precomputed layout, with the raw solution.
pub fn theta_norm_on(layout: &MomentLayout, x: &Tensor, settings: &SolverSettings) -> Result<(f64, ConicSolution)> {
    let problem = assemble_norm_sdp(layout, x)?;
    let sol = solve(&problem, settings)?;
    require_optimal(&sol, "theta norm")?;
    Ok((sol.objective.max(0.0), sol))
}

/// `‖x‖_{θ_k(I_p)}`.
pub fn theta_norm(x: &Tensor, p: NormExponent, k: u32, settings: &SolverSettings) -> Result<f64> {
    let layout = layout_for(x.shape(), p, k)?;
    theta_norm_on(&layout, x, settings).map(|r| r.0)
}

/// Linear measurements `<A_i, x> = b_i` of one shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementEnsemble {
    shape: Shape,
    measurements: Vec<(Tensor, f64)>,
    seed: Option<u64>,
}

impl MeasurementEnsemble {
    pub fn new(measurements: Vec<(Tensor, f64)>) -> Result<Self> {
        let shape = measurements
            .first()
            .map(|(a, _)| a.shape().clone())
            .ok_or_else(|| Error::InvalidArgument("no measurements".into()))?;
        for (a, b) in &measurements {
            if a.shape() != &shape {
                return Err(Error::DimensionMismatch(format!("measurement shape {} vs {shape}", a.shape())));
            }
            if !b.is_finite() {
                return Err(Error::InvalidArgument("measurement value is not finite".into()));
            }
        }
        Ok(Self { shape, measurements, seed: None })
    }

    /// `m` i.i.d. standard Gaussian measurements of `truth`. For a fixed
    /// seed, smaller `m` gives a prefix of the larger ensemble.
    pub fn gaussian(truth: &Tensor, m: usize, seed: u64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument("m must be positive".into()));
        }
        let mut rng = seeded_rng(seed);
        let measurements = (0..m)
            .map(|_| {
                let a = random_gaussian(truth.shape(), &mut rng);
                let b = a.dot(truth)?;
                Ok((a, b))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { shape: truth.shape().clone(), measurements, seed: Some(seed) })
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn measurements(&self) -> &[(Tensor, f64)] {
        &self.measurements
    }

    pub fn len(&self) -> usize {
        self.measurements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measurements.is_empty()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Reads `{"shape": [...], "a": [[...], ...], "b": [...]}` with each
    /// row of `a` a row-major measurement tensor. `seed` is optional.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: MeasurementFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("measurement file: {e}")))?;
        if raw.a.len() != raw.b.len() {
            return Err(Error::Parse(format!("measurement file: {} tensors but {} values", raw.a.len(), raw.b.len())));
        }
        let shape = Shape::new(raw.shape)?;
        let measurements = raw
            .a
            .into_iter()
            .zip(raw.b)
            .map(|(a, b)| Ok((Tensor::new(shape.clone(), a)?, b)))
            .collect::<Result<Vec<_>>>()?;
        let mut ens = Self::new(measurements)?;
        ens.seed = raw.seed;
        Ok(ens)
    }

    pub fn to_json(&self) -> String {
        let raw = MeasurementFile {
            shape: self.shape.dims().to_vec(),
            a: self.measurements.iter().map(|(a, _)| a.values().to_vec()).collect(),
            b: self.measurements.iter().map(|m| m.1).collect(),
            seed: self.seed,
        };
        serde_json::to_string(&raw).expect("measurement serialization cannot fail")
    }

    pub fn read(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }

    /// The first `m` measurements.
    pub fn prefix(&self, m: usize) -> Result<Self> {
        if m == 0 || m > self.len() {
            return Err(Error::InvalidArgument(format!("prefix {m} of {} measurements", self.len())));
        }
        Ok(Self { shape: self.shape.clone(), measurements: self.measurements[..m].to_vec(), seed: self.seed })
    }
}

#[derive(Serialize, Deserialize)]
struct MeasurementFile {
    shape: Vec<usize>,
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryResult {
    pub recovered: Tensor,
    pub norm_value: f64,
    pub rel_error: Option<f64>,
    pub success: Option<bool>,
    pub diagnostics: Diagnostics,
}

/// Relative Frobenius error `‖x - truth‖ / ‖truth‖` (absolute if truth is 0).
pub fn relative_error(x: &Tensor, truth: &Tensor) -> Result<f64> {
    let diff = x.combine(1.0, truth, -1.0)?.frobenius_norm();
    let t = truth.frobenius_norm();
    Ok(if t > 0.0 { diff / t } else { diff })
}

/// Recovery on a precomputed layout.
pub fn recover_on(
    layout: &MomentLayout,
    ens: &MeasurementEnsemble,
    truth: Option<&Tensor>,
    settings: &SolverSettings,
) -> Result<RecoveryResult> {
    let start = Instant::now();
    let problem = assemble_recovery_sdp(layout, ens.measurements())?;
    let sol = solve(&problem, settings)?;
    require_optimal(&sol, "recovery")?;
    let recovered = linear_part(layout, &sol.x)?;
    let rel_error = truth.map(|t| relative_error(&recovered, t)).transpose()?;
    Ok(RecoveryResult {
        recovered,
        norm_value: sol.objective,
        rel_error,
        success: rel_error.map(|e| e < SUCCESS_THRESHOLD),
        diagnostics: Diagnostics::new(&sol, start),
    })
}

/// `argmin ‖x‖_{θ_k(I_p)}` subject to the measurements.
pub fn recover(
    ens: &MeasurementEnsemble,
    p: NormExponent,
    k: u32,
    truth: Option<&Tensor>,
    settings: &SolverSettings,
) -> Result<RecoveryResult> {
    let layout = layout_for(ens.shape(), p, k)?;
    recover_on(&layout, ens, truth, settings)
}

/// PSD Gram matrix over a monomial basis.
#[derive(Debug, Clone, PartialEq)]
pub struct GramWitness {
    pub basis: Vec<Monomial>,
    pub gram: DMatrix<f64>,
}

impl GramWitness {
    /// `Σ Q_ij b_i b_j` reduced modulo `g`, as floating-point coefficients.
    pub fn reconstruct(&self, g: &GroebnerBasis) -> Vec<(Monomial, f64)> {
        let n = self.basis.len();
        let mut acc: std::collections::BTreeMap<Monomial, f64> = std::collections::BTreeMap::new();
        let mut cache = std::collections::HashMap::new();
        for i in 0..n {
            for j in 0..n {
                let q = self.gram[(i, j)];
                if q == 0.0 {
                    continue;
                }
                let prod = self.basis[i].mul(&self.basis[j]);
                let r: &Polynomial = cache.entry(prod.clone()).or_insert_with(|| reduce(&Polynomial::monomial(prod), g));
                for (m, c) in r.terms() {
                    *acc.entry(m.clone()).or_insert(0.0) += q * crate::groebner::coeff_to_f64(c);
                }
            }
        }
        acc.into_iter().collect()
    }

    /// Largest coefficientwise deviation between the reconstruction and
    /// the normal form of `f`.
    pub fn max_deviation(&self, f: &Polynomial, g: &GroebnerBasis) -> f64 {
        let target = reduce(f, g);
        let mut rec: std::collections::BTreeMap<Monomial, f64> = self.reconstruct(g).into_iter().collect();
        for (m, c) in target.terms() {
            *rec.entry(m.clone()).or_insert(0.0) -= crate::groebner::coeff_to_f64(c);
        }
        rec.values().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.gram.clone().symmetric_eigenvalues().min()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Certificate {
    Feasible(GramWitness),
    Infeasible,
    Undecided(Diagnostics),
}

/// Solver settings used for certificates unless overridden: the witness
/// must reproduce coefficients to 1e-6, so the solve runs tighter.
pub fn certify_settings() -> SolverSettings {
    SolverSettings::default().with_eps(1e-8)
}

fn gram_from_solution(problem: &ConicProblem, dim: usize, sol: &ConicSolution) -> DMatrix<f64> {
    // the PSD slack is exactly the projected Gram matrix
    let start = problem.cones.zero + problem.cones.nonneg;
    smat(dim, &sol.s[start..start + svec_len(dim)])
}

/// Decides whether `f`, a polynomial in the variables of `shape`, is a sum
/// of squares of degree-`k` polynomials modulo `I_p`.
pub fn certify_sos(
    f: &Polynomial,
    shape: &Shape,
    p: NormExponent,
    k: u32,
    settings: &SolverSettings,
) -> Result<Certificate> {
    let g = build_groebner(shape, Some(p))?;
    certify_sos_with(f, &g, k, settings)
}

/// [`certify_sos`] against an explicit Gröbner basis.
pub fn certify_sos_with(f: &Polynomial, g: &GroebnerBasis, k: u32, settings: &SolverSettings) -> Result<Certificate> {
    let start = Instant::now();
    let r = reduce(f, g);
    if r.degree() > 2 * k {
        return Err(Error::DegreeExceeded { degree: r.degree(), limit: 2 * k });
    }
    let layout = build_moment_layout(g, k)?;
    let (target, unmatched) = target_of(&layout, &r);
    if unmatched.iter().any(|a| a.constant != 0.0) {
        return Ok(Certificate::Infeasible);
    }
    let problem = gram_program(&layout, &target, &[], 0, &[])?;
    let sol = solve(&problem, settings)?;
    Ok(match sol.status {
        SolveStatus::Optimal => Certificate::Feasible(GramWitness {
            basis: layout.basis().monomials().to_vec(),
            gram: gram_from_solution(&problem, layout.dim(), &sol),
        }),
        SolveStatus::InfeasibleCertificate => Certificate::Infeasible,
        _ => Certificate::Undecided(Diagnostics::new(&sol, start)),
    })
}

/// How the measurement count is chosen per trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MeasurementPlan {
    /// Solve at each listed `m`.
    Sweep(Vec<usize>),
    /// Smallest successful `m` in `[lo, hi]`: exponential bracket from
    /// `lo`, then bisection.
    Search { lo: usize, hi: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub shape: Shape,
    /// Rank of the ground truth, or its maximum with `rank_up_to`.
    pub rank: usize,
    pub rank_up_to: bool,
    pub kind: TensorKind,
    pub norms: Vec<NormExponent>,
    pub k: u32,
    pub plan: MeasurementPlan,
    pub trials: usize,
    pub seed: u64,
    pub settings: SolverSettings,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 {
            return Err(Error::InvalidArgument("rank must be at least 1".into()));
        }
        if self.norms.is_empty() {
            return Err(Error::InvalidArgument("no norms requested".into()));
        }
        let n = self.shape.len();
        match &self.plan {
            MeasurementPlan::Sweep(ms) => {
                if ms.is_empty() || ms.iter().any(|&m| m == 0 || m > n) {
                    return Err(Error::InvalidArgument(format!("measurement counts must lie in 1..={n}")));
                }
            }
            MeasurementPlan::Search { lo, hi } => {
                if *lo == 0 || lo > hi || *hi > n {
                    return Err(Error::InvalidArgument(format!("search range {lo}..={hi} must lie in 1..={n}")));
                }
            }
        }
        self.settings.validate()
    }
}

/// One solve of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub trial: usize,
    pub p: String,
    pub k: u32,
    pub shape: String,
    pub rank: usize,
    pub kind: String,
    pub m: usize,
    pub success: bool,
    pub rel_error: f64,
    pub norm_value: f64,
    pub iters: usize,
    pub time_ms: f64,
}

/// Smallest successful `m` found by a search, per trial and norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimalM {
    pub trial: usize,
    pub p: String,
    pub m: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub rows: Vec<ExperimentRow>,
    pub minimal: Vec<MinimalM>,
}

/// Ground truth and measurement pool of trial `t`.
pub fn trial_instance(cfg: &ExperimentConfig, t: usize) -> Result<(Tensor, usize, MeasurementEnsemble)> {
    let truth_seed = derive_seed(cfg.seed, 2 * t as u64);
    let meas_seed = derive_seed(cfg.seed, 2 * t as u64 + 1);
    let rank = if cfg.rank_up_to { seeded_rng(derive_seed(truth_seed, 0)).random_range(1..=cfg.rank) } else { cfg.rank };
    let truth = random_low_rank(&cfg.shape, rank, cfg.kind, truth_seed)?;
    let m_max = match &cfg.plan {
        MeasurementPlan::Sweep(ms) => *ms.iter().max().expect("validated"),
        MeasurementPlan::Search { hi, .. } => *hi,
    };
    let pool = MeasurementEnsemble::gaussian(&truth, m_max, meas_seed)?;
    Ok((truth, rank, pool))
}

fn probe(
    cfg: &ExperimentConfig,
    layout: &MomentLayout,
    p: NormExponent,
    trial: usize,
    rank: usize,
    truth: &Tensor,
    pool: &MeasurementEnsemble,
    m: usize,
    observe: Observer,
) -> Result<ExperimentRow> {
    let start = Instant::now();
    let ens = pool.prefix(m)?;
    let base = ExperimentRow {
        trial,
        p: p.to_string(),
        k: cfg.k,
        shape: cfg.shape.dims().iter().map(|d| d.to_string()).collect::<Vec<_>>().join(","),
        rank,
        kind: cfg.kind.to_string(),
        m,
        success: false,
        rel_error: f64::NAN,
        norm_value: f64::NAN,
        iters: 0,
        time_ms: 0.0,
    };
    let problem = assemble_recovery_sdp(layout, ens.measurements())?;
    let sol = solve(&problem, &cfg.settings)?;
    let time_ms = start.elapsed().as_secs_f64() * 1e3;
    observe(&problem, &sol);
    if !sol.is_optimal() {
        return Ok(ExperimentRow { iters: sol.iterations, time_ms, ..base });
    }
    let recovered = linear_part(layout, &sol.x)?;
    let rel_error = relative_error(&recovered, truth)?;
    Ok(ExperimentRow {
        success: rel_error < SUCCESS_THRESHOLD,
        rel_error,
        norm_value: sol.objective,
        iters: sol.iterations,
        time_ms,
        ..base
    })
}

fn run_trial(
    cfg: &ExperimentConfig,
    layouts: &[(NormExponent, MomentLayout)],
    t: usize,
    observe: Observer,
) -> Result<ExperimentResult> {
    let (truth, rank, pool) = trial_instance(cfg, t)?;
    let mut out = ExperimentResult::default();
    for (p, layout) in layouts {
        match &cfg.plan {
            MeasurementPlan::Sweep(ms) => {
                for &m in ms {
                    out.rows.push(probe(cfg, layout, *p, t, rank, &truth, &pool, m, observe)?);
                }
            }
            MeasurementPlan::Search { lo, hi } => {
                let run = |m: usize, rows: &mut Vec<ExperimentRow>| -> Result<bool> {
                    let row = probe(cfg, layout, *p, t, rank, &truth, &pool, m, observe)?;
                    let ok = row.success;
                    rows.push(row);
                    Ok(ok)
                };
                // bracket: last failure below, first success above
                let mut fail = lo - 1;
                let mut m = *lo;
                let mut found = None;
                loop {
                    if run(m, &mut out.rows)? {
                        found = Some(m);
                        break;
                    }
                    fail = m;
                    if m == *hi {
                        break;
                    }
                    m = (2 * m).min(*hi);
                }
                if let Some(mut ok) = found {
                    while ok - fail > 1 {
                        let mid = fail + (ok - fail) / 2;
                        if run(mid, &mut out.rows)? {
                            ok = mid;
                        } else {
                            fail = mid;
                        }
                    }
                    found = Some(ok);
                }
                out.minimal.push(MinimalM { trial: t, p: p.to_string(), m: found });
            }
        }
    }
    Ok(out)
}

/// Runs all trials; rows come out ordered by trial, then norm, then probe.
pub fn run_recovery_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    run_recovery_experiment_observed(cfg, &|_, _| {})
}

/// [`run_recovery_experiment`], handing every solve to `observe`.
pub fn run_recovery_experiment_observed(cfg: &ExperimentConfig, observe: Observer) -> Result<ExperimentResult> {
    cfg.validate()?;
    if cfg.trials == 0 {
        return Ok(ExperimentResult::default());
    }
    let layouts: Vec<(NormExponent, MomentLayout)> =
        cfg.norms.iter().map(|&p| Ok((p, layout_for(&cfg.shape, p, cfg.k)?))).collect::<Result<_>>()?;
    let per_trial: Vec<Result<ExperimentResult>> =
        (0..cfg.trials).into_par_iter().map(|t| run_trial(cfg, &layouts, t, observe)).collect();
    let mut out = ExperimentResult::default();
    for r in per_trial {
        let r = r?;
        out.rows.extend(r.rows);
        out.minimal.extend(r.minimal);
    }
    Ok(out)
}
