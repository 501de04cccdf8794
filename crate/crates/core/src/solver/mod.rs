//! Operator-splitting solver for conic programs over the zero, nonnegative
//! and positive semidefinite cones.
//!
//! ADMM on the homogeneous self-dual embedding
//!
//! ```text
//!   Q u = v,   u = (x, y, τ) ∈ R^n × K* × R_+,   v = (0, s, κ) ∈ 0 × K × R_+
//!   Q = [ 0  A'  c ; -A  0  b ; -c' -b'  0 ]
//! ```
//!
//! The linear system `(I + Q) z = w` is reduced to one sparse Cholesky
//! factorization of `I + A'A`, done once. Data are equilibrated first.

mod anderson;
mod cholesky;
mod psd;

pub use cholesky::SparseCholesky;
pub use psd::{project_psd, smat, svec};

use serde::{Deserialize, Serialize};

use crate::conic::{svec_len, ConicProblem, SparseMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub max_iterations: usize,
    pub eps_primal: f64,
    pub eps_dual: f64,
    pub eps_gap: f64,
    /// Over-relaxation, in (0, 2).
    pub alpha: f64,
    /// Relative weight of primal against dual data after equilibration.
    pub rho: f64,
    /// Certificate threshold for infeasibility and unboundedness.
    pub eps_infeasible: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            max_iterations: 100_000,
            eps_primal: 1e-6,
            eps_dual: 1e-6,
            eps_gap: 1e-6,
            alpha: 1.5,
            rho: 1.0,
            eps_infeasible: 1e-7,
        }
    }
}

impl SolverSettings {
    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps_primal = eps;
        self.eps_dual = eps;
        self.eps_gap = eps;
        self
    }

    pub fn with_max_iterations(mut self, iters: usize) -> Self {
        self.max_iterations = iters;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !(pos(self.eps_primal) && pos(self.eps_dual) && pos(self.eps_gap) && pos(self.eps_infeasible)) {
            return Err(Error::InvalidArgument("solver tolerances must be positive".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return Err(Error::InvalidArgument(format!("relaxation {} outside (0, 2)", self.alpha)));
        }
        if !pos(self.rho) {
            return Err(Error::InvalidArgument("rho must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be positive".into()));
        }
        Ok(())
    }
}

/// Receives every problem and solution a batch driver solves, e.g. for
/// independent residual checks.
pub type Observer<'a> = &'a (dyn Fn(&ConicProblem, &ConicSolution) + Sync);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    InfeasibleCertificate,
    UnboundedCertificate,
    MaxIters,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Optimal => "optimal",
            Self::InfeasibleCertificate => "infeasible",
            Self::UnboundedCertificate => "unbounded",
            Self::MaxIters => "max_iters",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

impl Residuals {
    /// Relative residuals of a candidate primal-dual triple.
    pub fn compute(p: &ConicProblem, x: &[f64], y: &[f64], s: &[f64]) -> Self {
        let mut r = p.b.iter().zip(s).map(|(b, s)| s - b).collect::<Vec<_>>();
        p.a.mul_add(x, &mut r);
        let mut d = p.c.clone();
        p.a.tmul_add(y, &mut d);
        let cx = dot(&p.c, x);
        let by = dot(&p.b, y);
        Self {
            primal: norm(&r) / (1.0 + norm(&p.b)),
            dual: norm(&d) / (1.0 + norm(&p.c)),
            gap: (cx + by).abs() / (1.0 + cx.abs() + by.abs()),
        }
    }

    fn score(&self, s: &SolverSettings) -> f64 {
        let v = [self.primal / s.eps_primal, self.dual / s.eps_dual, self.gap / s.eps_gap];
        if v.iter().any(|x| !x.is_finite()) {
            return f64::INFINITY;
        }
        v[0].max(v[1]).max(v[2])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConicSolution {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub s: Vec<f64>,
    pub objective: f64,
    pub status: SolveStatus,
    pub residuals: Residuals,
    pub iterations: usize,
}

impl ConicSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

const CHECK_EVERY: usize = 10;
const RUIZ_PASSES: usize = 25;
const ADAPT_EVERY: usize = 100;
const ADAPT_RATIO: f64 = 5.0;
const ADAPT_GROWTH: f64 = 1.3;
const ANDERSON_MEMORY: usize = 10;
const ANDERSON_SAFEGUARD: f64 = 1.0;

/// Row and column equilibration; the row factor is uniform within each PSD
/// block so the cone is preserved.
fn equilibrate(p: &ConicProblem, a: &mut SparseMatrix) -> (Vec<f64>, Vec<f64>) {
    let (m, n) = (p.num_rows(), p.num_vars());
    let mut d = vec![1.0; m];
    let mut e = vec![1.0; n];
    let lin = p.cones.zero + p.cones.nonneg;
    for _ in 0..RUIZ_PASSES {
        let (mut rmax, cmax) = a.abs_max_rows_cols();
        let mut start = lin;
        for &bn in &p.cones.psd {
            let len = svec_len(bn);
            let mx = rmax[start..start + len].iter().cloned().fold(0.0, f64::max);
            rmax[start..start + len].iter_mut().for_each(|r| *r = mx);
            start += len;
        }
        let f = |v: f64| if v > 1e-12 { (1.0 / v.sqrt()).clamp(1e-4, 1e4) } else { 1.0 };
        let dr: Vec<f64> = rmax.iter().map(|&v| f(v)).collect();
        let ec: Vec<f64> = cmax.iter().map(|&v| f(v)).collect();
        if dr.iter().chain(&ec).all(|&v| (v - 1.0).abs() < 1e-3) {
            break;
        }
        a.scale(&dr, &ec);
        d.iter_mut().zip(&dr).for_each(|(a, b)| *a *= b);
        e.iter_mut().zip(&ec).for_each(|(a, b)| *a *= b);
    }
    (d, e)
}

struct Workspace {
    a: SparseMatrix,
    chol: SparseCholesky,
    h: Vec<f64>,
    g: Vec<f64>,
    hg: f64,
    n: usize,
    m: usize,
    scratch: Vec<f64>,
    tmp: Vec<f64>,
}

impl Workspace {
    fn new(a: SparseMatrix, b: &[f64], c: &[f64]) -> Result<Self> {
        let (m, n) = (a.nrows(), a.ncols());
        // lower triangle of I + A'A, through rows of A
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
        for j in 0..n {
            for (i, v) in a.column(j) {
                rows[i].push((j, v));
            }
        }
        let mut acc: std::collections::HashMap<(usize, usize), f64> = std::collections::HashMap::new();
        for r in &rows {
            for &(j1, v1) in r {
                for &(j2, v2) in r {
                    if j1 >= j2 {
                        *acc.entry((j1, j2)).or_insert(0.0) += v1 * v2;
                    }
                }
            }
        }
        let mut lower: Vec<(usize, usize, f64)> = acc.into_iter().map(|((i, j), v)| (i, j, v)).collect();
        lower.sort_unstable_by_key(|t| (t.1, t.0));
        lower.extend((0..n).map(|j| (j, j, 1.0)));
        let chol = SparseCholesky::factor(n, &lower)?;
        let mut ws = Self {
            a,
            chol,
            h: c.iter().chain(b).cloned().collect(),
            g: Vec::new(),
            hg: 0.0,
            n,
            m,
            scratch: Vec::new(),
            tmp: vec![0.0; n],
        };
        let mut g = ws.h.clone();
        ws.solve_m(&mut g);
        ws.hg = dot(&ws.h, &g);
        ws.g = g;
        Ok(ws)
    }

    /// Multiplies the `b` part of the embedding data by `theta`.
    fn rescale_b(&mut self, theta: f64) {
        for h in &mut self.h[self.n..] {
            *h *= theta;
        }
        let mut g = self.h.clone();
        self.solve_m(&mut g);
        self.hg = dot(&self.h, &g);
        self.g = g;
    }

    /// Solves `[I A'; -A I] z = w` in place.
    fn solve_m(&mut self, w: &mut [f64]) {
        let (p, q) = w.split_at_mut(self.n);
        // (I + A'A) a = p - A'q
        self.tmp.fill(0.0);
        self.a.tmul_add(q, &mut self.tmp);
        for (pi, t) in p.iter_mut().zip(&self.tmp) {
            *pi -= t;
        }
        self.chol.solve_in_place(p, &mut self.scratch);
        // b = q + A a
        self.a.mul_add(p, q);
    }

    /// Solves `(I + Q) z = w` in place; `w` has length n + m + 1.
    fn solve(&mut self, w: &mut [f64]) {
        let nm = self.n + self.m;
        let wt = w[nm];
        self.solve_m(&mut w[..nm]);
        let tau = (wt + dot(&self.h, &w[..nm])) / (1.0 + self.hg);
        for (z, g) in w[..nm].iter_mut().zip(&self.g) {
            *z -= g * tau;
        }
        w[nm] = tau;
    }
}

/// Projection onto `R^n × K* × R_+` of the vector `(x, y, τ)`.
fn project_dual_cone(p: &ConicProblem, n: usize, u: &mut [f64]) {
    let y = &mut u[n..];
    let mut k = p.cones.zero;
    for v in &mut y[k..k + p.cones.nonneg] {
        *v = v.max(0.0);
    }
    k += p.cones.nonneg;
    for &bn in &p.cones.psd {
        let len = svec_len(bn);
        psd::project_svec(bn, &mut y[k..k + len]);
        k += len;
    }
    let t = y.len() - 1;
    y[t] = y[t].max(0.0);
}

/// Solves `min c'x  s.t.  Ax + s = b, s ∈ K`.
pub fn solve(p: &ConicProblem, settings: &SolverSettings) -> Result<ConicSolution> {
    p.validate()?;
    settings.validate()?;
    let (m, n) = (p.num_rows(), p.num_vars());
    let mut a = p.a.clone();
    let (d, e) = equilibrate(p, &mut a);
    let mut bh: Vec<f64> = p.b.iter().zip(&d).map(|(b, d)| b * d).collect();
    let mut ch: Vec<f64> = p.c.iter().zip(&e).map(|(c, e)| c * e).collect();
    let (nb, nc) = (norm(&bh), norm(&ch));
    let mut sb = if nb > 0.0 { settings.rho / nb } else { 1.0 };
    let sc = if nc > 0.0 { 1.0 / nc } else { 1.0 };
    bh.iter_mut().for_each(|v| *v *= sb);
    ch.iter_mut().for_each(|v| *v *= sc);
    let mut ws = Workspace::new(a, &bh, &ch)?;

    let len = n + m + 1;
    // Douglas-Rachford on z: ũ = (I+Q)^{-1} z, u = Π(2ũ - z), z += α(u - ũ).
    // The pair (u, v = u - (2ũ - z)) is complementary by construction.
    let mut z = vec![0.0; len];
    z[len - 1] = 1.0;
    let mut ut = vec![0.0; len];
    let mut u = vec![0.0; len];
    let mut v = vec![0.0; len];
    let mut f = vec![0.0; len];
    let alpha = settings.alpha;
    let mut aa = anderson::Anderson::new(ANDERSON_MEMORY);
    let mut guard: Option<(Vec<f64>, f64)> = None;

    let unscale = |u: &[f64], v: &[f64], sb: f64| -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let x: Vec<f64> = u[..n].iter().zip(&e).map(|(x, e)| x * e / sb).collect();
        let y: Vec<f64> = u[n..n + m].iter().zip(&d).map(|(y, d)| y * d / sc).collect();
        let s: Vec<f64> = v[n..n + m].iter().zip(&d).map(|(s, d)| s / d / sb).collect();
        (x, y, s)
    };

    let mut best: Option<(f64, ConicSolution)> = None;
    let mut last_adapt = 0;
    let mut adapt_gap = ADAPT_EVERY;
    for it in 1..=settings.max_iterations {
        ut.copy_from_slice(&z);
        ws.solve(&mut ut);
        for i in 0..len {
            u[i] = 2.0 * ut[i] - z[i];
        }
        v.copy_from_slice(&u);
        project_dual_cone(p, n, &mut u);
        for i in 0..len {
            v[i] = u[i] - v[i];
            f[i] = alpha * (u[i] - ut[i]);
        }
        let nf = norm(&f);
        if let Some((base, nf_base)) = guard.take() {
            if !(nf <= ANDERSON_SAFEGUARD * nf_base) {
                // extrapolation made things worse: fall back to the plain step
                z = base;
                aa.reset();
                continue;
            }
        }
        let tz: Vec<f64> = z.iter().zip(&f).map(|(a, b)| a + b).collect();
        match aa.step(&z, &f) {
            Some(mut cand) if cand.iter().all(|c| c.is_finite()) => {
                // The map is positively homogeneous and 0 is a fixed point;
                // unchecked extrapolation can drift there and lose tau.
                // Fixed points form a cone, so only the direction matters.
                let (nc, nt) = (norm(&cand), norm(&tz));
                if nc > 0.0 {
                    cand.iter_mut().for_each(|c| *c *= nt / nc);
                }
                guard = Some((tz, nf));
                z = cand;
            }
            _ => z = tz,
        }

        if it % CHECK_EVERY != 0 && it != settings.max_iterations {
            continue;
        }
        let tau = u[len - 1];
        let kappa = v[len - 1];
        let (xs, ys, ss) = unscale(&u, &v, sb);
        if tau > 1e-12 * (1.0 + kappa) {
            let x: Vec<f64> = xs.iter().map(|v| v / tau).collect();
            let y: Vec<f64> = ys.iter().map(|v| v / tau).collect();
            let s: Vec<f64> = ss.iter().map(|v| v / tau).collect();
            let res = Residuals::compute(p, &x, &y, &s);
            let score = res.score(settings);
            if nb > 0.0 && it - last_adapt >= adapt_gap && score > 1.0 {
                let ratio = (res.primal / settings.eps_primal) / (res.dual / settings.eps_dual).max(1e-300);
                if !(1.0 / ADAPT_RATIO..=ADAPT_RATIO).contains(&ratio) {
                    let theta = ratio.sqrt().clamp(0.1, 10.0);
                    ws.rescale_b(theta);
                    sb *= theta;
                    // restart from the rescaled complementary pair
                    for i in 0..n {
                        z[i] = theta * u[i];
                    }
                    for i in n..len {
                        z[i] = u[i] + theta * v[i];
                    }
                    aa.reset();
                    guard = None;
                    last_adapt = it;
                    adapt_gap = (adapt_gap as f64 * ADAPT_GROWTH) as usize;
                }
            }
            let sol = ConicSolution {
                objective: dot(&p.c, &x),
                x,
                y,
                s,
                status: SolveStatus::Optimal,
                residuals: res,
                iterations: it,
            };
            if score <= 1.0 {
                return Ok(sol);
            }
            if best.as_ref().is_none_or(|(bs, _)| score < *bs) {
                best = Some((score, sol));
            }
        }
        // certificates
        let by = dot(&p.b, &ys);
        if by < 0.0 {
            let mut aty = vec![0.0; n];
            p.a.tmul_add(&ys, &mut aty);
            if norm(&aty) / -by <= settings.eps_infeasible {
                let scale = -1.0 / by;
                let y: Vec<f64> = ys.iter().map(|v| v * scale).collect();
                return Ok(ConicSolution {
                    x: vec![f64::NAN; n],
                    s: vec![f64::NAN; m],
                    objective: f64::INFINITY,
                    residuals: Residuals { primal: f64::NAN, dual: norm(&aty) * scale, gap: f64::NAN },
                    y,
                    status: SolveStatus::InfeasibleCertificate,
                    iterations: it,
                });
            }
        }
        let cx = dot(&p.c, &xs);
        if cx < 0.0 {
            let mut axs = ss.clone();
            p.a.mul_add(&xs, &mut axs);
            if norm(&axs) / -cx <= settings.eps_infeasible {
                let scale = -1.0 / cx;
                return Ok(ConicSolution {
                    x: xs.iter().map(|v| v * scale).collect(),
                    s: ss.iter().map(|v| v * scale).collect(),
                    y: vec![f64::NAN; m],
                    objective: f64::NEG_INFINITY,
                    residuals: Residuals { primal: norm(&axs) * scale, dual: f64::NAN, gap: f64::NAN },
                    status: SolveStatus::UnboundedCertificate,
                    iterations: it,
                });
            }
        }
    }
    let mut sol = match best {
        Some((_, s)) => s,
        None => {
            let (x, y, s) = unscale(&u, &v, sb);
            let residuals = Residuals::compute(p, &x, &y, &s);
            ConicSolution { objective: dot(&p.c, &x), x, y, s, status: SolveStatus::MaxIters, residuals, iterations: 0 }
        }
    };
    sol.status = SolveStatus::MaxIters;
    sol.iterations = settings.max_iterations;
    Ok(sol)
}
