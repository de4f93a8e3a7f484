//! `conefree` command line: `solve`, `generate` and `bench`.
//!
//! Exit codes: 0 solved (or file written), 1 usage / input error,
//! 2 iteration limit reached, 3 diverged.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use crate::admm::{SolveError, Solver, SolverConfig, Status, TermMode};
use crate::gen::{generate, ConeKind, GenSpec};
use crate::io::{self, BenchRow, Solution};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_MAX_ITERS: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;

/// Environment variable capping the bench worker pool.
pub const THREADS_ENV: &str = "CONEFREE_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "conefree",
    version,
    about = "Matrix-free ADMM for sparse conic programs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve a problem file.
    Solve(SolveArgs),
    /// Write a random feasible instance.
    Generate(GenerateArgs),
    /// Generate and solve a sweep of instances, writing one CSV row each.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct StopArgs {
    #[arg(long, default_value_t = 100_000)]
    max_iters: usize,
    #[arg(long, default_value_t = 25)]
    check_every: usize,
    /// osqp, scs or target.
    #[arg(long = "term", default_value = "scs")]
    term_mode: TermMode,
    #[arg(long, default_value_t = 1e-4)]
    eps_abs: f64,
    #[arg(long, default_value_t = 1e-3)]
    eps_rel: f64,
    /// Tolerance for the scs mode (primal, dual and gap).
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
    #[arg(long)]
    target_prim: Option<f64>,
    #[arg(long)]
    target_gap: Option<f64>,
}

impl StopArgs {
    fn config(&self, mu: f64) -> SolverConfig<f64> {
        SolverConfig {
            mu,
            max_iters: self.max_iters,
            check_every: self.check_every,
            term_mode: self.term_mode,
            eps_abs: self.eps_abs,
            eps_rel: self.eps_rel,
            target_prim_res: self.target_prim,
            target_gap: self.target_gap,
            ..SolverConfig::default()
        }
        .with_eps(self.eps)
    }
}

#[derive(Debug, Args)]
struct SolveArgs {
    file: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    #[command(flatten)]
    stop: StopArgs,
    /// Solution file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Convergence trace CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    density: f64,
    /// lp or socp4.
    #[arg(long, default_value = "lp")]
    cone: ConeKind,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Draw c as plain normals instead of the bounded construction.
    #[arg(long)]
    raw_c: bool,
    /// Problem file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Target nonzero counts; shapes use n = 4m.
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0.01")]
    densities: Vec<f64>,
    #[arg(long, default_value = "lp")]
    cone: ConeKind,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "0.05")]
    mu: Vec<f64>,
    #[command(flatten)]
    stop: StopArgs,
    #[arg(long)]
    raw_c: bool,
    /// Bench CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        source: io::ReadError,
    },
    #[error("{path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Gen(#[from] crate::gen::GenError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Other(String),
}

/// Parses `argv` (including the program name), runs the command and
/// returns the process exit code.
pub fn run_cli<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Solve(a) => cmd_solve(&a),
        Command::Generate(a) => cmd_generate(&a).map(|_| EXIT_OK),
        Command::Bench(a) => cmd_bench(&a).map(|_| EXIT_OK),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|source| CliError::Write {
            path: p.to_path_buf(),
            source,
        }),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|source| CliError::Write {
                path: PathBuf::from("<stdout>"),
                source,
            }),
    }
}

pub fn exit_code(status: Status) -> i32 {
    match status {
        Status::Solved | Status::Running => EXIT_OK,
        Status::MaxIters => EXIT_MAX_ITERS,
        Status::Diverged => EXIT_DIVERGED,
    }
}

fn cmd_solve(a: &SolveArgs) -> Result<i32, CliError> {
    let p = io::read_problem_file(&a.file).map_err(|source| CliError::Read {
        path: a.file.clone(),
        source,
    })?;
    let solver = Solver::new(&p, a.stop.config(a.mu))?;
    let start = Instant::now();
    let mut times = Vec::new();
    let res = solver.run_with(|_| times.push(start.elapsed().as_secs_f64() * 1e3));
    let elapsed = start.elapsed().as_secs_f64() * 1e3;

    if let Some(path) = &a.trace {
        let mut buf = Vec::new();
        io::write_trace_csv(&mut buf, &res.trace, &times)?;
        emit(Some(path), &buf)?;
    }
    let sol = Solution::new(&res.report, &res.x, &res.lambda);
    emit(a.out.as_deref(), sol.to_string().as_bytes())?;
    let r = &res.report;
    eprintln!(
        "{} after {} iterations in {:.1} ms: pobj {:.6e} dobj {:.6e} prim {:.2e} dual {:.2e} gap {:.2e}",
        r.status, r.iter, elapsed, r.pobj, r.dobj, r.prim_res_2, r.dual_res_2, r.gap
    );
    Ok(exit_code(r.status))
}

fn cmd_generate(a: &GenerateArgs) -> Result<(), CliError> {
    let mut spec = GenSpec::new(a.m, a.n, a.density, a.cone, a.seed);
    spec.bounded_mode = !a.raw_c;
    let inst = generate(&spec)?;
    emit(
        a.out.as_deref(),
        io::write_problem(&inst.problem).as_bytes(),
    )
}

/// Shape `(m, 4m')` with about `nnz / density` cells and `n ≈ 4m`.
/// `n` is kept a multiple of 4 so that `socp4` instances fit.
pub fn bench_shape(nnz: usize, density: f64) -> (usize, usize) {
    let cells = nnz as f64 / density;
    let m = ((cells / 4.0).sqrt().round() as usize).max(1);
    let n = 4 * ((cells / (4.0 * m as f64)).round() as usize).max(1);
    (m, n)
}

struct BenchCase {
    id: usize,
    spec: GenSpec,
    mu: f64,
}

fn cmd_bench(a: &BenchArgs) -> Result<(), CliError> {
    // Every μ value reuses the instance of its (size, density) pair.
    let mut cases = Vec::new();
    let mut instance = 0u64;
    for &size in &a.sizes {
        for &density in &a.densities {
            let (m, n) = bench_shape(size, density);
            let mut spec = GenSpec::new(m, n, density, a.cone, a.seed.wrapping_add(instance));
            spec.bounded_mode = !a.raw_c;
            spec.validate()?;
            for &mu in &a.mu {
                cases.push(BenchCase {
                    id: cases.len(),
                    spec: spec.clone(),
                    mu,
                });
            }
            instance += 1;
        }
    }
    for &mu in &a.mu {
        a.stop.config(mu).validate().map_err(SolveError::from)?;
    }

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(k) = threads_from_env()? {
        pool = pool.num_threads(k);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Other(format!("thread pool: {e}")))?;
    let rows: Vec<BenchRow> = pool.install(|| {
        cases
            .par_iter()
            .map(|case| run_case(case, &a.stop))
            .collect::<Result<_, CliError>>()
    })?;

    let mut buf = Vec::new();
    io::write_bench_csv(&mut buf, &rows)?;
    emit(a.out.as_deref(), &buf)
}

fn threads_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(k) if k > 0 => Ok(Some(k)),
            _ => Err(CliError::Other(format!(
                "{THREADS_ENV} must be a positive integer, got '{v}'"
            ))),
        },
        Err(_) => Ok(None),
    }
}

fn run_case(case: &BenchCase, stop: &StopArgs) -> Result<BenchRow, CliError> {
    let inst = generate(&case.spec)?;
    let p = &inst.problem;
    let cfg = stop.config(case.mu);
    let term_mode = cfg.term_mode;
    let solver = Solver::new(p, cfg)?;
    let start = Instant::now();
    let res = solver.run();
    let time_ms = start.elapsed().as_secs_f64() * 1e3;
    let r = &res.report;
    Ok(BenchRow {
        instance_id: case.id,
        m: p.num_rows(),
        n: p.num_cols(),
        nnz: p.a.nnz(),
        density: case.spec.density,
        cone_kind: case.spec.cone_kind.to_string(),
        mu: case.mu,
        term_mode: term_mode.to_string(),
        iters: r.iter,
        time_ms,
        prim_res_2: r.prim_res_2,
        dual_res_2: r.dual_res_2,
        gap: r.gap,
        cone_gap: r.cone_gap,
        status: r.status.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_hit_the_target() {
        for (nnz, density) in [
            (10_000, 0.01),
            (100_000, 0.01),
            (1_000_000, 0.01),
            (500, 0.05),
        ] {
            let (m, n) = bench_shape(nnz, density);
            assert_eq!(n % 4, 0);
            let got = (m as f64 * n as f64 * density).round();
            assert!(
                (got - nnz as f64).abs() / (nnz as f64) < 0.05,
                "{nnz}: {m}x{n}"
            );
            assert!((n as f64 / m as f64 - 4.0).abs() < 0.5);
        }
        assert_eq!(bench_shape(10_000, 0.01), (500, 2000));
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run_cli(["conefree"]), EXIT_USAGE);
        assert_eq!(run_cli(["conefree", "solve"]), EXIT_USAGE);
        assert_eq!(
            run_cli(["conefree", "solve", "x", "--term", "nope"]),
            EXIT_USAGE
        );
        assert_eq!(
            run_cli(["conefree", "solve", "/nonexistent/problem.txt"]),
            EXIT_USAGE
        );
        assert_eq!(run_cli(["conefree", "--help"]), EXIT_OK);
    }

    #[test]
    fn solve_config_from_flags() {
        let cli = Cli::try_parse_from([
            "conefree",
            "solve",
            "p.txt",
            "--mu",
            "0.5",
            "--term",
            "osqp",
            "--eps",
            "1e-6",
            "--check-every",
            "10",
        ])
        .unwrap();
        let Command::Solve(a) = cli.command else {
            panic!("expected solve");
        };
        let cfg = a.stop.config(a.mu);
        assert_eq!(cfg.mu, 0.5);
        assert_eq!(cfg.term_mode, TermMode::Osqp);
        assert_eq!(cfg.eps_gap, 1e-6);
        assert_eq!(cfg.check_every, 10);
        assert_eq!(cfg.max_iters, 100_000);
    }
}
