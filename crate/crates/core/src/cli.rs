//! Command-line front end. `parse_args` validates, `run` produces the output
//! text, and `main_entry` maps failures to exit codes:
//! 2 for usage errors, 3 for a missing input file, 1 for solver failures.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;

use crate::certify::certify;
use crate::descent::{anneal_from, default_delta, default_start, descend};
use crate::error::Error;
use crate::gw::{egw_value, gw_align, Coupling};
use crate::io::{self, *};
use crate::lp::{solve_entropic_lp, solve_lp, EntropicOptions};
use crate::polytope::{constants, enumerate_vertices};
use crate::qp::{b_op_norm, g_eval, g_eps, rate_constants};
use crate::rates::{counterexample, sweep, SolverConfig};

#[derive(Debug, Parser)]
#[command(name = "entroqp", version, about = "Entropic concave QP toolkit")]
pub struct Cli {
    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Vertices of a polytope file as CSV rows.
    Vertices { file: PathBuf },
    /// Exact and entropic linear programs.
    #[command(subcommand)]
    Lp(LpCommand),
    /// Variational form, descent and certification.
    #[command(subcommand)]
    Qp(QpCommand),
    /// Convergence sweeps and the slow-rate counterexamples.
    #[command(subcommand)]
    Rates(RatesCommand),
    /// Gromov-Wasserstein values and alignments.
    #[command(subcommand)]
    Gw(GwCommand),
}

#[derive(Debug, Subcommand)]
pub enum LpCommand {
    /// Exact LP, or the entropic LP when `--epsilon` is positive.
    Solve {
        file: PathBuf,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        epsilon: f64,
    },
}

#[derive(Debug, Args)]
pub struct PointArgs {
    pub file: PathBuf,
    /// Comma-separated vector, or a JSON file holding an array.
    #[arg(long, allow_hyphen_values = true)]
    pub u: String,
    #[arg(long, allow_negative_numbers = true)]
    pub epsilon: f64,
}

#[derive(Debug, Subcommand)]
pub enum QpCommand {
    /// `g_eps(u)`; `--epsilon 0` gives the unregularized value.
    Value(PointArgs),
    Grad(PointArgs),
    /// Polytope and rate constants.
    Constants { file: PathBuf },
    Solve {
        file: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        epsilon: f64,
        #[arg(long, allow_negative_numbers = true)]
        delta: Option<f64>,
        /// Decreasing schedule `E1,E2,...` run before the final epsilon.
        #[arg(long)]
        anneal: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        u0: Option<String>,
        #[arg(long, default_value_t = 5000)]
        max_iter: usize,
    },
    Certify {
        file: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        u: String,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        eta0: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CounterexampleKind {
    Convex,
    Indefinite,
}

#[derive(Debug, Subcommand)]
pub enum RatesCommand {
    /// CSV of distance and cost gaps over an epsilon grid.
    Sweep {
        file: PathBuf,
        /// `geometric:HI:LO:N` or a decreasing list `E1,E2,...`.
        #[arg(long)]
        eps_grid: String,
        #[arg(long, allow_negative_numbers = true)]
        delta: Option<f64>,
        #[arg(long, default_value_t = 5000)]
        max_iter: usize,
    },
    Counterexample {
        #[arg(long, value_enum)]
        kind: CounterexampleKind,
        #[arg(long, allow_negative_numbers = true)]
        epsilon: f64,
    },
}

#[derive(Debug, Subcommand)]
pub enum GwCommand {
    /// Coupling as a CSV matrix; `--report` adds a JSON summary.
    Align {
        file: PathBuf,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        q: f64,
        #[arg(long, allow_negative_numbers = true)]
        epsilon: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, allow_negative_numbers = true)]
        delta: Option<f64>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    Value {
        file: PathBuf,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        q: f64,
        #[arg(long, allow_negative_numbers = true)]
        epsilon: f64,
    },
}

#[derive(Debug)]
pub enum CliError {
    /// `--help` or `--version` output; not a failure.
    Help(String),
    Usage(String),
    NotFound(PathBuf),
    Solver(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Help(_) => 0,
            Self::Usage(_) => 2,
            Self::NotFound(_) => 3,
            Self::Solver(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Help(m) => write!(f, "{m}"),
            Self::Usage(m) => write!(f, "usage error: {m}"),
            Self::NotFound(p) => write!(f, "file not found: {}", p.display()),
            Self::Solver(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Json(j) => Self::Usage(format!("malformed input: {j}")),
            e => Self::Solver(e),
        }
    }
}

/// Validated command line.
#[derive(Debug)]
pub struct RunConfig {
    pub cli: Cli,
    /// Parsed `--eps-grid`, when present.
    pub grid: Option<Vec<f64>>,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn need_positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(usage(format!("--{name} must be positive, got {v}")))
    }
}

fn need_nonnegative(name: &str, v: f64) -> Result<(), CliError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(usage(format!("--{name} must be nonnegative, got {v}")))
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| usage(format!("not a number: {t:?}"))))
        .collect()
}

fn decreasing_positive(v: Vec<f64>) -> Result<Vec<f64>, CliError> {
    if v.is_empty() || v.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
        return Err(usage("grid entries must be positive and finite"));
    }
    if v.windows(2).any(|w| w[1] >= w[0]) {
        return Err(usage("grid must be strictly decreasing"));
    }
    Ok(v)
}

/// `geometric:HI:LO:N` gives `N` points from `HI` down to `LO` with a
/// constant ratio; anything else is read as a comma-separated list.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    if let Some(rest) = spec.strip_prefix("geometric:") {
        let parts: Vec<&str> = rest.split(':').collect();
        let [hi, lo, n] = parts[..] else {
            return Err(usage(format!("expected geometric:HI:LO:N, got {spec:?}")));
        };
        let hi: f64 = hi.parse().map_err(|_| usage(format!("bad HI {hi:?}")))?;
        let lo: f64 = lo.parse().map_err(|_| usage(format!("bad LO {lo:?}")))?;
        let n: usize = n.parse().map_err(|_| usage(format!("bad N {n:?}")))?;
        if n == 0 || !(hi > 0.0) || !(lo > 0.0) {
            return Err(usage("geometric grid needs HI, LO > 0 and N >= 1"));
        }
        if n == 1 {
            return decreasing_positive(vec![hi]);
        }
        let ratio = (lo / hi).powf(1.0 / (n - 1) as f64);
        let mut v: Vec<f64> = (0..n).map(|k| hi * ratio.powi(k as i32)).collect();
        v[n - 1] = lo;
        return decreasing_positive(v);
    }
    decreasing_positive(parse_list(spec)?)
}

fn check_exists(p: &Path) -> Result<(), CliError> {
    if p.exists() {
        Ok(())
    } else {
        Err(CliError::NotFound(p.to_path_buf()))
    }
}

pub fn parse_args<I, T>(argv: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => CliError::Help(e.to_string()),
        _ => usage(e.to_string()),
    })?;
    let mut grid = None;
    let file = match &cli.command {
        Command::Vertices { file } => Some(file),
        Command::Lp(LpCommand::Solve { file, epsilon }) => {
            need_nonnegative("epsilon", *epsilon)?;
            Some(file)
        }
        Command::Qp(q) => match q {
            QpCommand::Value(a) => {
                need_nonnegative("epsilon", a.epsilon)?;
                Some(&a.file)
            }
            QpCommand::Grad(a) => {
                need_positive("epsilon", a.epsilon)?;
                Some(&a.file)
            }
            QpCommand::Constants { file } => Some(file),
            QpCommand::Solve { file, epsilon, delta, anneal, .. } => {
                need_positive("epsilon", *epsilon)?;
                if let Some(d) = delta {
                    need_positive("delta", *d)?;
                }
                if let Some(a) = anneal {
                    let s = decreasing_positive(parse_list(a)?)?;
                    if s.last().is_some_and(|&l| l <= *epsilon) {
                        return Err(usage("--anneal entries must exceed --epsilon"));
                    }
                }
                Some(file)
            }
            QpCommand::Certify { file, eta0, tol, .. } => {
                need_positive("eta0", *eta0)?;
                need_positive("tol", *tol)?;
                Some(file)
            }
        },
        Command::Rates(RatesCommand::Sweep { file, eps_grid, delta, .. }) => {
            grid = Some(parse_grid(eps_grid)?);
            if let Some(d) = delta {
                need_positive("delta", *d)?;
            }
            Some(file)
        }
        Command::Rates(RatesCommand::Counterexample { epsilon, .. }) => {
            need_positive("epsilon", *epsilon)?;
            None
        }
        Command::Gw(GwCommand::Align { file, q, epsilon, delta, .. }) => {
            need_positive("q", *q)?;
            need_positive("epsilon", *epsilon)?;
            if let Some(d) = delta {
                need_positive("delta", *d)?;
            }
            Some(file)
        }
        Command::Gw(GwCommand::Value { file, q, epsilon }) => {
            need_positive("q", *q)?;
            need_nonnegative("epsilon", *epsilon)?;
            Some(file)
        }
    };
    if let Some(f) = file {
        check_exists(f)?;
    }
    Ok(RunConfig { cli, grid })
}

fn read<T: for<'de> serde::Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    check_exists(path)?;
    Ok(io::read_json(path)?)
}

/// Vector given inline as `a,b,c` or as a path to a JSON array.
fn parse_vector(s: &str) -> Result<DVector<f64>, CliError> {
    let p = Path::new(s);
    let v: Vec<f64> = if p.is_file() { read(p)? } else { parse_list(s)? };
    Ok(DVector::from_vec(v))
}

fn check_len(u: &DVector<f64>, r: usize) -> Result<(), CliError> {
    if u.len() == r {
        Ok(())
    } else {
        Err(usage(format!("--u has {} entries, the problem has r = {r}", u.len())))
    }
}

/// Main text output plus optional side files (path, contents).
pub struct RunOutput {
    pub text: String,
    pub side: Vec<(PathBuf, String)>,
}

impl From<String> for RunOutput {
    fn from(text: String) -> Self {
        Self { text, side: Vec::new() }
    }
}

pub fn run(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    match &cfg.cli.command {
        Command::Vertices { file } => {
            let f: LpFile = read(file)?;
            let vs = enumerate_vertices(&f.polytope.build()?)?;
            let header: Vec<String> = (0..vs.vertices.first().map_or(0, |v| v.len())).map(|j| format!("x{j}")).collect();
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            let rows: Vec<Vec<f64>> = vs.iter().map(vec_of).collect();
            Ok(csv_rows(Some(&header), &rows).into())
        }
        Command::Lp(LpCommand::Solve { file, epsilon }) => {
            let f: LpFile = read(file)?;
            let p = f.polytope.build()?;
            let c = DVector::from_vec(f.c.ok_or_else(|| usage("LP file needs \"c\""))?);
            let out = if *epsilon == 0.0 {
                let s = solve_lp(&p, &c)?;
                LpOutput { residual: p.residual(&s.x), x: vec_of(&s.x), value: s.value, iterations: s.pivots }
            } else {
                let s = solve_entropic_lp(&p, &c, *epsilon, &EntropicOptions::default())?;
                LpOutput { x: vec_of(&s.x), value: s.value, iterations: s.iterations, residual: s.residual }
            };
            Ok(to_json(&out)?.into())
        }
        Command::Qp(q) => run_qp(q),
        Command::Rates(RatesCommand::Sweep { file, delta, max_iter, .. }) => {
            let f: ProblemFile = read(file)?;
            let qp = f.build()?;
            let vs = qp.vertices()?;
            let grid = cfg.grid.as_ref().expect("grid parsed with the sweep");
            let scfg = SolverConfig { delta: *delta, max_iter: *max_iter, ..Default::default() };
            let records = sweep(&qp, vs, grid, &scfg)?;
            for r in &records {
                if let Some(msg) = &r.failure {
                    eprintln!("epsilon {}: {msg}", r.epsilon);
                }
            }
            Ok(sweep_csv(&records).into())
        }
        Command::Rates(RatesCommand::Counterexample { kind, epsilon }) => {
            let text = match kind {
                CounterexampleKind::Convex => to_json(&counterexample::convex_counterexample(*epsilon)?)?,
                CounterexampleKind::Indefinite => to_json(&counterexample::indefinite_counterexample(*epsilon)?)?,
            };
            Ok(text.into())
        }
        Command::Gw(GwCommand::Align { file, q, epsilon, seed, delta, report }) => {
            let f: SpacesFile = read(file)?;
            let problem = f.build(*q)?;
            let a = gw_align(&problem, *epsilon, *delta, *seed)?;
            let mut out = RunOutput::from(coupling_csv(&a.coupling));
            if let Some(path) = report {
                let summary = GwAlignOutput {
                    epsilon: *epsilon,
                    q: problem.q,
                    cost: a.cost,
                    g_value: a.descent.g_value,
                    coupling: a.coupling.matrix.row_iter().map(|r| r.iter().copied().collect()).collect(),
                    certificate: (&a.certificate).into(),
                };
                out.side.push((path.clone(), to_json(&summary)?));
            }
            Ok(out)
        }
        Command::Gw(GwCommand::Value { file, q, epsilon }) => {
            let f: SpacesFile = read(file)?;
            let problem = f.build(*q)?;
            let value = egw_value(&problem, *epsilon, &SolverConfig::default())?;
            let out = GwValueOutput { epsilon: *epsilon, q: problem.q, constant_term: problem.constant, value };
            Ok(to_json(&out)?.into())
        }
    }
}

fn run_qp(cmd: &QpCommand) -> Result<RunOutput, CliError> {
    match cmd {
        QpCommand::Value(a) => {
            let qp = read::<ProblemFile>(&a.file)?.build()?;
            let u = parse_vector(&a.u)?;
            check_len(&u, qp.r())?;
            let value = g_eps(&qp, a.epsilon, &u)?;
            Ok(to_json(&ValueOutput { epsilon: a.epsilon, u: vec_of(&u), value })?.into())
        }
        QpCommand::Grad(a) => {
            let qp = read::<ProblemFile>(&a.file)?.build()?;
            let u = parse_vector(&a.u)?;
            check_len(&u, qp.r())?;
            let e = g_eval(&qp, a.epsilon, &u)?;
            let out = GradOutput { epsilon: a.epsilon, u: vec_of(&u), grad_norm: e.grad.norm(), grad: vec_of(&e.grad) };
            Ok(to_json(&out)?.into())
        }
        QpCommand::Constants { file } => {
            let qp = read::<ProblemFile>(file)?.build()?;
            let vs = qp.vertices()?;
            let pc = constants(qp.polytope(), vs)?;
            let k = rate_constants(&qp, vs, &pc)?;
            let out = ConstantsOutput {
                r1: pc.r1,
                rh: pc.rh,
                alpha: k.alpha,
                gamma: k.gamma,
                delta: k.delta,
                epsilon_max: k.epsilon_max,
                optimal_cells: k.optimal_cells,
                gamma_i: k.gamma_i,
                delta_i: k.delta_i,
                g0_min: k.g0_min,
                b_op_norm: b_op_norm(&qp),
            };
            Ok(to_json(&out)?.into())
        }
        QpCommand::Solve { file, epsilon, delta, anneal, u0, max_iter } => {
            let qp = read::<ProblemFile>(file)?.build()?;
            let delta = match delta {
                Some(d) => *d,
                None => default_delta(&qp)?,
            };
            let start = match u0 {
                Some(s) => parse_vector(s)?,
                None => default_start(&qp)?,
            };
            check_len(&start, qp.r())?;
            let r = match anneal {
                Some(a) => {
                    let mut schedule = parse_list(a)?;
                    schedule.push(*epsilon);
                    anneal_from(&qp, &schedule, &start, delta, *max_iter)?
                }
                None => descend(&qp, *epsilon, &start, delta, *max_iter)?,
            };
            if !r.converged {
                eprintln!("warning: stopped at |grad| = {:e} above delta = {delta:e}", r.grad_norm);
            }
            Ok(to_json(&SolveOutput::from(&r))?.into())
        }
        QpCommand::Certify { file, u, eta0, seed, tol } => {
            let qp = read::<ProblemFile>(file)?.build()?;
            let u = parse_vector(u)?;
            check_len(&u, qp.r())?;
            let c = certify(&qp, &u, *eta0, *seed, *tol)?;
            Ok(to_json(&CertificateOutput::from(&c))?.into())
        }
    }
}

/// Coupling of a GW alignment as CSV text, rows indexed by space1.
pub fn coupling_csv(c: &Coupling) -> String {
    let rows: Vec<Vec<f64>> = c.matrix.row_iter().map(|r| r.iter().copied().collect()).collect();
    csv_rows(None, &rows)
}

fn emit(cfg: &RunConfig, out: RunOutput) -> Result<(), CliError> {
    for (path, text) in &out.side {
        write_atomic(path, text)?;
    }
    match &cfg.cli.out {
        Some(path) => write_atomic(path, &out.text)?,
        None => print!("{}", out.text),
    }
    Ok(())
}

/// Parses, runs and writes; returns the process exit code.
pub fn main_entry<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let result = parse_args(argv).and_then(|cfg| {
        let out = run(&cfg)?;
        emit(&cfg, out)
    });
    match result {
        Ok(()) => 0,
        Err(CliError::Help(msg)) => {
            print!("{msg}");
            0
        }
        Err(e) => {
            eprintln!("entroqp: {e}");
            e.exit_code()
        }
    }
}
