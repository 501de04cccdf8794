use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use thetabody::groebner::{build_groebner, first_buchberger_failure, is_reduced, parse_polynomial, NormExponent};
use thetabody::gwidth::estimate_width_bound;
use thetabody::recovery::{
    certify_settings, certify_sos, recover, run_recovery_experiment, Certificate, ExperimentConfig, MeasurementEnsemble,
    MeasurementPlan, theta_norm,
};
use thetabody::report::{
    minimal_m_curves, success_curves, svg_line_plot, width_rows, write_experiment_csv, write_minimal_csv,
    write_width_csv,
};
use thetabody::solver::SolverSettings;
use thetabody::tensor::{derive_seed, random_low_rank, Shape, Tensor, TensorKind};
use thetabody::Error;

/// Theta-body norms, recovery experiments and sum of squares certificates
/// for real tensors.
#[derive(Parser, Debug)]
#[command(name = "thetabody", version)]
struct Cli {
    /// Worker threads (default: logical cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Iteration cap of the conic solver.
    #[arg(long, global = true)]
    max_iters: Option<usize>,
    /// Residual tolerance of the conic solver.
    #[arg(long, global = true)]
    eps: Option<f64>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the Gröbner basis of the rank-one ideal, optionally with a norm constraint.
    Groebner {
        #[arg(long)]
        shape: String,
        /// `1`, `2`, `4`, ... or `inf`; omit for the rank-one ideal alone.
        #[arg(long)]
        p: Option<String>,
        #[arg(long)]
        check_buchberger: bool,
    },
    /// Theta-norm of a tensor file.
    Norm {
        #[command(flatten)]
        body: Body,
        #[arg(long)]
        tensor: PathBuf,
    },
    /// Recover a tensor from linear measurements by theta-norm minimization.
    Recover(RecoverArgs),
    /// Decide whether a polynomial is a sum of squares modulo the ideal.
    Certify {
        #[arg(long)]
        shape: String,
        #[command(flatten)]
        body: Body,
        /// Polynomial text, e.g. `1 + x[1,1]`.
        #[arg(long, conflicts_with = "poly_file")]
        poly: Option<String>,
        #[arg(long)]
        poly_file: Option<PathBuf>,
        /// Where to write the Gram witness (JSON).
        #[arg(long)]
        witness: Option<PathBuf>,
    },
    /// Batch recovery trials written as CSV.
    Experiment(ExperimentArgs),
    /// Monte-Carlo estimate of the measurement bound from the normal-cone gauge.
    Gwidth {
        /// Repeat for a sweep over shapes.
        #[arg(long, required = true)]
        shape: Vec<String>,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// CSV destination (default: standard output).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct Body {
    /// `1`, `2`, `4`, ... or `inf`.
    #[arg(long)]
    p: String,
    #[arg(long, default_value_t = 1)]
    k: u32,
}

#[derive(Args, Debug)]
struct RecoverArgs {
    #[command(flatten)]
    body: Body,
    /// Measurement file; otherwise a Gaussian ensemble of `--m` measurements is drawn.
    #[arg(long)]
    measurements: Option<PathBuf>,
    /// Ground truth file, used for the error and to generate measurements.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Shape of a random ground truth.
    #[arg(long)]
    shape: Option<String>,
    #[arg(long, default_value_t = 1)]
    rank: usize,
    #[arg(long, default_value = "gaussian")]
    kind: String,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the recovered tensor here.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[arg(long)]
    shape: String,
    /// Comma-separated list, e.g. `inf,2`.
    #[arg(long)]
    p: String,
    #[arg(long, default_value_t = 1)]
    k: u32,
    #[arg(long, default_value_t = 1)]
    rank: usize,
    /// Draw each trial's rank uniformly from `1..=rank`.
    #[arg(long)]
    rank_up_to: bool,
    #[arg(long, default_value = "gaussian")]
    kind: String,
    /// Comma-separated measurement counts to sweep.
    #[arg(long, conflicts_with = "search")]
    m: Option<String>,
    /// Search the minimal successful m in `LO..HI` (default `1..N`).
    #[arg(long)]
    search: Option<String>,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV destination (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-trial minimal m of a search, as CSV.
    #[arg(long)]
    minimal_out: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Write 0 in the `time_ms` column so reruns are byte-identical.
    #[arg(long)]
    no_timing: bool,
}

/// Exit codes: 0 success, 1 solver could not decide, 2 bad input.
fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Solver(_) => 1,
                _ => 2,
            })
        }
    }
}

fn settings(cli: &Cli, base: SolverSettings) -> thetabody::Result<SolverSettings> {
    let mut s = base;
    if let Some(n) = cli.max_iters {
        s = s.with_max_iterations(n);
    }
    if let Some(e) = cli.eps {
        s = s.with_eps(e);
    }
    s.validate()?;
    Ok(s)
}

fn norm_list(s: &str) -> thetabody::Result<Vec<NormExponent>> {
    s.split(',').map(str::parse).collect()
}

fn usize_list(s: &str) -> thetabody::Result<Vec<usize>> {
    s.split(',')
        .map(|t| t.trim().parse().map_err(|_| Error::Parse(format!("bad count {t:?} in {s:?}"))))
        .collect()
}

fn range(s: &str) -> thetabody::Result<(usize, usize)> {
    let bad = || Error::Parse(format!("expected LO..HI, got {s:?}"));
    let (lo, hi) = s.split_once("..").ok_or_else(bad)?;
    Ok((lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?))
}

fn create(path: &Path) -> thetabody::Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn sink(path: &Option<PathBuf>) -> thetabody::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_text(path: &Path, text: &str) -> thetabody::Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn read_input<T>(path: &Path, f: impl Fn(&Path) -> thetabody::Result<T>) -> thetabody::Result<T> {
    f(path).map_err(|e| match e {
        Error::Io(m) => Error::Io(format!("{}: {m}", path.display())),
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

#[derive(Serialize)]
struct WitnessFile {
    basis: Vec<String>,
    gram: Vec<Vec<f64>>,
}

fn run(cli: Cli) -> thetabody::Result<bool> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::InvalidArgument("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    }
    match &cli.cmd {
        Command::Groebner { shape, p, check_buchberger } => {
            let shape: Shape = shape.parse()?;
            let p = p.as_deref().map(str::parse::<NormExponent>).transpose()?;
            let g = build_groebner(&shape, p)?;
            let mut out = io::stdout().lock();
            for f in g.polynomials() {
                writeln!(out, "{}", f.display(&shape))?;
            }
            if *check_buchberger {
                match first_buchberger_failure(&g) {
                    None => writeln!(out, "buchberger: ok")?,
                    Some((i, j)) => {
                        writeln!(out, "buchberger: S({i},{j}) does not reduce to zero")?;
                        return Ok(false);
                    }
                }
                writeln!(out, "reduced: {}", if is_reduced(&g) { "yes" } else { "no" })?;
            }
            Ok(true)
        }
        Command::Norm { body, tensor } => {
            let p: NormExponent = body.p.parse()?;
            let x = read_input(tensor, Tensor::read)?;
            let v = theta_norm(&x, p, body.k, &settings(&cli, SolverSettings::default())?)?;
            println!("{v}");
            Ok(true)
        }
        Command::Recover(a) => run_recover(&cli, a),
        Command::Certify { shape, body, poly, poly_file, witness } => {
            let shape: Shape = shape.parse()?;
            let p: NormExponent = body.p.parse()?;
            let text = match (poly, poly_file) {
                (Some(t), _) => t.clone(),
                (None, Some(f)) => read_input(f, |f| Ok(std::fs::read_to_string(f)?))?,
                (None, None) => return Err(Error::InvalidArgument("give --poly or --poly-file".into())),
            };
            let f = parse_polynomial(text.trim(), &shape)?;
            let cert = certify_sos(&f, &shape, p, body.k, &settings(&cli, certify_settings())?)?;
            match cert {
                Certificate::Feasible(w) => {
                    println!("feasible");
                    if let Some(path) = witness {
                        let file = WitnessFile {
                            basis: w.basis.iter().map(|m| m.display(&shape).to_string()).collect(),
                            gram: w.gram.row_iter().map(|r| r.iter().copied().collect()).collect(),
                        };
                        let json = serde_json::to_string_pretty(&file).expect("witness serialization cannot fail");
                        write_text(path, &(json + "\n"))?;
                    }
                    Ok(true)
                }
                Certificate::Infeasible => {
                    println!("infeasible");
                    Ok(true)
                }
                Certificate::Undecided(d) => {
                    println!("undecided");
                    eprintln!(
                        "solver stopped with status {} after {} iterations (residuals {:.2e}/{:.2e}/{:.2e})",
                        d.status, d.iterations, d.residuals.primal, d.residuals.dual, d.residuals.gap
                    );
                    Ok(false)
                }
            }
        }
        Command::Experiment(a) => run_experiment(&cli, a),
        Command::Gwidth { shape, samples, seed, out, svg } => {
            let shapes: Vec<Shape> = shape.iter().map(|s| s.parse()).collect::<thetabody::Result<_>>()?;
            let st = settings(&cli, SolverSettings::default())?;
            let mut rows = Vec::new();
            let mut trend = Vec::new();
            for s in &shapes {
                let est = estimate_width_bound(s, *samples, *seed, &st)?;
                eprintln!(
                    "{s}: mean gamma^2 {:.4} (stderr {:.4}), bound {:.4}",
                    est.mean_gamma_sq, est.stderr_gamma_sq, est.bound_mean
                );
                trend.push((s.max_dim() as f64, est.mean_gamma_sq));
                rows.extend(width_rows(&est));
            }
            let mut w = sink(out)?;
            write_width_csv(&mut w, &rows)?;
            w.flush()?;
            if let Some(path) = svg {
                let plot = svg_line_plot("Normal-cone gauge", "n", "mean gamma^2", &[("mean gamma^2".into(), trend)]);
                write_text(path, &plot)?;
            }
            Ok(true)
        }
    }
}

fn run_recover(cli: &Cli, a: &RecoverArgs) -> thetabody::Result<bool> {
    let p: NormExponent = a.body.p.parse()?;
    let kind: TensorKind = a.kind.parse()?;
    let mut truth = a.truth.as_deref().map(|t| read_input(t, Tensor::read)).transpose()?;
    let ens = match &a.measurements {
        Some(path) => read_input(path, MeasurementEnsemble::read)?,
        None => {
            let m = a.m.ok_or_else(|| Error::InvalidArgument("give --measurements or --m".into()))?;
            if truth.is_none() {
                let shape: Shape = a
                    .shape
                    .as_deref()
                    .ok_or_else(|| Error::InvalidArgument("give --truth or --shape".into()))?
                    .parse()?;
                truth = Some(random_low_rank(&shape, a.rank, kind, derive_seed(a.seed, 0))?);
            }
            MeasurementEnsemble::gaussian(truth.as_ref().expect("set above"), m, derive_seed(a.seed, 1))?
        }
    };
    let res = recover(&ens, p, a.body.k, truth.as_ref(), &settings(cli, SolverSettings::default())?)?;
    println!("norm: {}", res.norm_value);
    if let (Some(e), Some(ok)) = (res.rel_error, res.success) {
        println!("rel_error: {e:e}");
        println!("success: {ok}");
    }
    println!("iterations: {}", res.diagnostics.iterations);
    if let Some(path) = &a.output {
        res.recovered.write(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(true)
}

fn run_experiment(cli: &Cli, a: &ExperimentArgs) -> thetabody::Result<bool> {
    let shape: Shape = a.shape.parse()?;
    let n = shape.len();
    let plan = match (&a.m, &a.search) {
        (Some(ms), _) => MeasurementPlan::Sweep(usize_list(ms)?),
        (None, Some(r)) => {
            let (lo, hi) = range(r)?;
            MeasurementPlan::Search { lo, hi }
        }
        (None, None) => MeasurementPlan::Search { lo: 1, hi: n },
    };
    let cfg = ExperimentConfig {
        shape,
        rank: a.rank,
        rank_up_to: a.rank_up_to,
        kind: a.kind.parse()?,
        norms: norm_list(&a.p)?,
        k: a.k,
        plan,
        trials: a.trials,
        seed: a.seed,
        settings: settings(cli, SolverSettings::default())?,
    };
    let mut res = run_recovery_experiment(&cfg)?;
    if a.no_timing {
        for r in &mut res.rows {
            r.time_ms = 0.0;
        }
    }
    let mut w = sink(&a.out)?;
    write_experiment_csv(&mut w, &res.rows)?;
    w.flush()?;
    drop(w);
    if let Some(path) = &a.minimal_out {
        let mut w = create(path)?;
        write_minimal_csv(&mut w, &res.minimal)?;
        w.flush()?;
    }
    if let Some(path) = &a.svg {
        let plot = match cfg.plan {
            MeasurementPlan::Sweep(_) => {
                let series: Vec<_> = success_curves(&res.rows).into_iter().map(|(p, c)| (format!("p = {p}"), c)).collect();
                svg_line_plot("Recovery success", "m", "success rate", &series)
            }
            MeasurementPlan::Search { hi, .. } => {
                let series: Vec<_> =
                    minimal_m_curves(&res.minimal, hi).into_iter().map(|(p, c)| (format!("p = {p}"), c)).collect();
                svg_line_plot("Recovered with at most m measurements", "m", "fraction of trials", &series)
            }
        };
        write_text(path, &plot)?;
    }
    for m in &res.minimal {
        eprintln!("trial {} p={}: minimal m {}", m.trial, m.p, m.m.map_or("none".to_string(), |v| v.to_string()));
    }
    Ok(true)
}
