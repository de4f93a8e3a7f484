//! Text formats: problem files, solution files and CSV traces.
//!
//! Problem file (UTF-8, zero-based indices, `#` lines are comments):
//!
//! ```text
//! CONEPROB 1
//! m n nnz
//! CONES κ s₁ … s_κ
//! i j value        (nnz lines, column-major order when written)
//! b₀ … b_{m−1}     (one per line)
//! c₀ … c_{n−1}     (one per line)
//! ```
//!
//! Reals are written in the shortest form that parses back to the same
//! `f64`, so `parse_problem(write_problem(p)) == p` bit for bit.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::admm::{IterationReport, Status};
use crate::model::{validate, ConeSpec, ProblemInstance, Triplet, TripletMatrix};

pub const PROBLEM_MAGIC: &str = "CONEPROB 1";

/// Shortest round-trip decimal for an `f64`.
pub fn fmt_real(v: f64) -> String {
    format!("{v:?}")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("{0}")]
    DimensionMismatch(String),
    #[error("duplicate entry ({row},{col}), first seen on line {first_line}")]
    DuplicateEntry {
        row: usize,
        col: usize,
        first_line: usize,
    },
    #[error("non-finite value '{0}'")]
    NonFinite(String),
    #[error("zero-valued entry ({row},{col})")]
    ZeroEntry { row: usize, col: usize },
    #[error("invalid number '{0}'")]
    InvalidNumber(String),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("malformed line: {0}")]
    MalformedLine(String),
    #[error("unexpected end of input, expected {0}")]
    UnexpectedEof(String),
    #[error("unexpected trailing content")]
    TrailingData,
}

/// Parse failure with the 1-based line it occurred on.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

impl ParseError {
    fn new(line: usize, kind: ParseErrorKind) -> Self {
        ParseError { line, kind }
    }
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            inner: text.lines().enumerate(),
            last: 0,
        }
    }

    /// Next non-comment, non-blank line with its 1-based number.
    fn next_content(&mut self) -> Option<(usize, &'a str)> {
        for (i, raw) in self.inner.by_ref() {
            self.last = i + 1;
            let t = raw.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            return Some((i + 1, t));
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<(usize, &'a str), ParseError> {
        self.next_content().ok_or_else(|| {
            ParseError::new(
                self.last + 1,
                ParseErrorKind::UnexpectedEof(what.to_string()),
            )
        })
    }
}

fn parse_count(tok: &str, line: usize, what: &str) -> Result<usize, ParseError> {
    tok.parse::<usize>().map_err(|_| {
        ParseError::new(
            line,
            ParseErrorKind::MalformedHeader(format!("{what}: '{tok}' is not a count")),
        )
    })
}

fn parse_real(tok: &str, line: usize) -> Result<f64, ParseError> {
    let v: f64 = tok
        .parse()
        .map_err(|_| ParseError::new(line, ParseErrorKind::InvalidNumber(tok.to_string())))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ParseError::new(
            line,
            ParseErrorKind::NonFinite(tok.to_string()),
        ))
    }
}

fn parse_index(tok: &str, line: usize, bound: usize, what: &str) -> Result<usize, ParseError> {
    let i: usize = tok.parse().map_err(|_| {
        ParseError::new(
            line,
            ParseErrorKind::MalformedLine(format!("{what} index '{tok}' is not a count")),
        )
    })?;
    if i >= bound {
        return Err(ParseError::new(
            line,
            ParseErrorKind::IndexOutOfRange(format!("{what} {i} ≥ {bound}")),
        ));
    }
    Ok(i)
}

fn single_real(lines: &mut Lines<'_>, what: &str) -> Result<f64, ParseError> {
    let (ln, text) = lines.expect(what)?;
    let mut toks = text.split_whitespace();
    let v = parse_real(toks.next().unwrap_or_default(), ln)?;
    if toks.next().is_some() {
        return Err(ParseError::new(
            ln,
            ParseErrorKind::MalformedLine(format!("expected a single value for {what}")),
        ));
    }
    Ok(v)
}

/// Parses and validates a problem file.
pub fn parse_problem(text: &str) -> Result<ProblemInstance<f64>, ParseError> {
    let mut lines = Lines::new(text);

    let (ln, magic) = lines.expect("header")?;
    if magic.split_whitespace().collect::<Vec<_>>() != ["CONEPROB", "1"] {
        return Err(ParseError::new(
            ln,
            ParseErrorKind::MalformedHeader(format!("expected '{PROBLEM_MAGIC}', found '{magic}'")),
        ));
    }

    let (ln, dims) = lines.expect("dimension line 'm n nnz'")?;
    let toks: Vec<&str> = dims.split_whitespace().collect();
    if toks.len() != 3 {
        return Err(ParseError::new(
            ln,
            ParseErrorKind::MalformedHeader("expected 'm n nnz'".into()),
        ));
    }
    let m = parse_count(toks[0], ln, "m")?;
    let n = parse_count(toks[1], ln, "n")?;
    let nnz = parse_count(toks[2], ln, "nnz")?;

    let (ln, cones_line) = lines.expect("CONES line")?;
    let toks: Vec<&str> = cones_line.split_whitespace().collect();
    if toks.first() != Some(&"CONES") || toks.len() < 2 {
        return Err(ParseError::new(
            ln,
            ParseErrorKind::MalformedHeader("expected 'CONES κ s₁ … s_κ'".into()),
        ));
    }
    let kappa = parse_count(toks[1], ln, "cone count")?;
    if toks.len() - 2 != kappa {
        return Err(ParseError::new(
            ln,
            ParseErrorKind::MalformedHeader(format!(
                "CONES declares {kappa} blocks but lists {}",
                toks.len() - 2
            )),
        ));
    }
    let sizes = toks[2..]
        .iter()
        .map(|t| parse_count(t, ln, "cone size"))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(pos) = sizes.iter().position(|&s| s == 0) {
        return Err(ParseError::new(
            ln,
            ParseErrorKind::MalformedHeader(format!("cone block {pos} has size 0")),
        ));
    }
    let sum: usize = sizes.iter().sum();
    if sum != n {
        return Err(ParseError::new(
            ln,
            ParseErrorKind::DimensionMismatch(format!("cone sizes sum {sum} ≠ n={n}")),
        ));
    }

    let mut entries = Vec::with_capacity(nnz);
    let mut seen: HashMap<(usize, usize), usize> = HashMap::with_capacity(nnz);
    for _ in 0..nnz {
        let (ln, text) = lines.expect("matrix entry 'i j value'")?;
        let toks: Vec<&str> = text.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(ParseError::new(
                ln,
                ParseErrorKind::MalformedLine("expected 'i j value'".into()),
            ));
        }
        let row = parse_index(toks[0], ln, m, "row")?;
        let col = parse_index(toks[1], ln, n, "column")?;
        let value = parse_real(toks[2], ln)?;
        if value == 0.0 {
            return Err(ParseError::new(ln, ParseErrorKind::ZeroEntry { row, col }));
        }
        if let Some(&first_line) = seen.get(&(row, col)) {
            return Err(ParseError::new(
                ln,
                ParseErrorKind::DuplicateEntry {
                    row,
                    col,
                    first_line,
                },
            ));
        }
        seen.insert((row, col), ln);
        entries.push(Triplet::new(row, col, value));
    }

    let b = (0..m)
        .map(|i| single_real(&mut lines, &format!("b[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;
    let c = (0..n)
        .map(|j| single_real(&mut lines, &format!("c[{j}]")))
        .collect::<Result<Vec<_>, _>>()?;

    if let Some((ln, _)) = lines.next_content() {
        return Err(ParseError::new(ln, ParseErrorKind::TrailingData));
    }

    let p = ProblemInstance::new(
        TripletMatrix::new(m, n, entries),
        b,
        c,
        ConeSpec::new(sizes),
    );
    let report = validate(&p);
    if let Some(v) = report.violations.first() {
        return Err(ParseError::new(
            lines.last,
            ParseErrorKind::DimensionMismatch(v.to_string()),
        ));
    }
    Ok(p)
}

/// Serialises a problem. Entries are written in column-major order.
pub fn write_problem(p: &ProblemInstance<f64>) -> String {
    let mut entries: Vec<&Triplet<f64>> = p.a.entries().iter().collect();
    if !p.a.is_canonical() {
        entries.sort_by_key(|t| (t.col, t.row));
    }
    let mut s = String::with_capacity(32 * (entries.len() + p.b.len() + p.c.len()) + 64);
    s.push_str(PROBLEM_MAGIC);
    s.push('\n');
    let _ = writeln!(s, "{} {} {}", p.num_rows(), p.num_cols(), entries.len());
    let _ = write!(s, "CONES {}", p.cones.num_blocks());
    for size in p.cones.block_sizes() {
        let _ = write!(s, " {size}");
    }
    s.push('\n');
    for t in entries {
        let _ = writeln!(s, "{} {} {}", t.row, t.col, fmt_real(t.value));
    }
    for &v in p.b.iter().chain(&p.c) {
        s.push_str(&fmt_real(v));
        s.push('\n');
    }
    s
}

pub fn read_problem_file(path: &std::path::Path) -> Result<ProblemInstance<f64>, ReadError> {
    let text = std::fs::read_to_string(path)?;
    Ok(parse_problem(&text)?)
}

#[derive(Debug, Error)]
pub enum ReadError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// Final iterate written by `solve`, plus the report it was judged on.
///
/// Layout: `STATUS`, `POBJ`, `DOBJ`, `ITERS`, the residual lines, then the
/// n entries of `x` followed by the m entries of `λ`, one per line.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: Status,
    pub pobj: f64,
    pub dobj: f64,
    pub iters: usize,
    pub prim_res_inf: f64,
    pub prim_res_2: f64,
    pub dual_res_inf: f64,
    pub dual_res_2: f64,
    pub gap: f64,
    pub cone_gap: f64,
    pub x: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl Solution {
    pub fn new(report: &IterationReport<f64>, x: &[f64], lambda: &[f64]) -> Self {
        Solution {
            status: report.status,
            pobj: report.pobj,
            dobj: report.dobj,
            iters: report.iter,
            prim_res_inf: report.prim_res_inf,
            prim_res_2: report.prim_res_2,
            dual_res_inf: report.dual_res_inf,
            dual_res_2: report.dual_res_2,
            gap: report.gap,
            cone_gap: report.cone_gap,
            x: x.to_vec(),
            lambda: lambda.to_vec(),
        }
    }
}

impl fmt::Display for Solution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "STATUS {}", self.status)?;
        writeln!(f, "POBJ {}", fmt_real(self.pobj))?;
        writeln!(f, "DOBJ {}", fmt_real(self.dobj))?;
        writeln!(f, "ITERS {}", self.iters)?;
        writeln!(f, "PRIM_RES_INF {}", fmt_real(self.prim_res_inf))?;
        writeln!(f, "PRIM_RES_2 {}", fmt_real(self.prim_res_2))?;
        writeln!(f, "DUAL_RES_INF {}", fmt_real(self.dual_res_inf))?;
        writeln!(f, "DUAL_RES_2 {}", fmt_real(self.dual_res_2))?;
        writeln!(f, "GAP {}", fmt_real(self.gap))?;
        writeln!(f, "CONE_GAP {}", fmt_real(self.cone_gap))?;
        writeln!(f, "# primal residual: A x - b")?;
        writeln!(
            f,
            "# dual residual: (A^T lambda + c) minus its projection onto K"
        )?;
        writeln!(f, "# gap: c^T x + b^T lambda; DOBJ = -b^T lambda")?;
        writeln!(f, "# x ({} values)", self.x.len())?;
        for &v in &self.x {
            writeln!(f, "{}", fmt_real(v))?;
        }
        writeln!(f, "# lambda ({} values)", self.lambda.len())?;
        for &v in &self.lambda {
            writeln!(f, "{}", fmt_real(v))?;
        }
        Ok(())
    }
}

/// Parses a solution file for a problem with `n` variables and `m` rows.
pub fn parse_solution(text: &str, n: usize, m: usize) -> Result<Solution, ParseError> {
    let mut lines = Lines::new(text);
    let mut keyed = |key: &str| -> Result<(usize, String), ParseError> {
        let (ln, t) = lines.expect(key)?;
        match t.split_once(char::is_whitespace) {
            Some((k, v)) if k == key => Ok((ln, v.trim().to_string())),
            _ => Err(ParseError::new(
                ln,
                ParseErrorKind::MalformedHeader(format!("expected '{key} …'")),
            )),
        }
    };
    let (ln, status) = keyed("STATUS")?;
    let status: Status = status
        .parse()
        .map_err(|e: String| ParseError::new(ln, ParseErrorKind::MalformedHeader(e)))?;
    let mut real = |key: &str| -> Result<f64, ParseError> {
        let (ln, v) = keyed(key)?;
        parse_real(&v, ln)
    };
    let pobj = real("POBJ")?;
    let dobj = real("DOBJ")?;
    let (ln, iters) = keyed("ITERS")?;
    let iters = parse_count(&iters, ln, "ITERS")?;
    let mut real = |key: &str| -> Result<f64, ParseError> {
        let (ln, v) = keyed(key)?;
        parse_real(&v, ln)
    };
    let prim_res_inf = real("PRIM_RES_INF")?;
    let prim_res_2 = real("PRIM_RES_2")?;
    let dual_res_inf = real("DUAL_RES_INF")?;
    let dual_res_2 = real("DUAL_RES_2")?;
    let gap = real("GAP")?;
    let cone_gap = real("CONE_GAP")?;
    let x = (0..n)
        .map(|j| single_real(&mut lines, &format!("x[{j}]")))
        .collect::<Result<Vec<_>, _>>()?;
    let lambda = (0..m)
        .map(|i| single_real(&mut lines, &format!("lambda[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some((ln, _)) = lines.next_content() {
        return Err(ParseError::new(ln, ParseErrorKind::TrailingData));
    }
    Ok(Solution {
        status,
        pobj,
        dobj,
        iters,
        prim_res_inf,
        prim_res_2,
        dual_res_inf,
        dual_res_2,
        gap,
        cone_gap,
        x,
        lambda,
    })
}

pub const TRACE_HEADER: [&str; 11] = [
    "iter",
    "prim_res_inf",
    "dual_res_inf",
    "prim_res_2",
    "dual_res_2",
    "cone_gap",
    "pobj",
    "dobj",
    "gap",
    "status",
    "time_ms",
];

/// Writes a convergence trace as CSV. `times_ms[k]` is the wall time at
/// which `trace[k]` was taken; pass an empty slice to leave the column blank.
pub fn write_trace_csv<W: io::Write>(
    out: W,
    trace: &[IterationReport<f64>],
    times_ms: &[f64],
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for (k, r) in trace.iter().enumerate() {
        let time = times_ms
            .get(k)
            .map(|t| format!("{t:.3}"))
            .unwrap_or_default();
        w.write_record([
            r.iter.to_string(),
            fmt_real(r.prim_res_inf),
            fmt_real(r.dual_res_inf),
            fmt_real(r.prim_res_2),
            fmt_real(r.dual_res_2),
            fmt_real(r.cone_gap),
            fmt_real(r.pobj),
            fmt_real(r.dobj),
            fmt_real(r.gap),
            r.status.to_string(),
            time,
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One line of the benchmark CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub instance_id: usize,
    pub m: usize,
    pub n: usize,
    pub nnz: usize,
    pub density: f64,
    pub cone_kind: String,
    pub mu: f64,
    pub term_mode: String,
    pub iters: usize,
    pub time_ms: f64,
    pub prim_res_2: f64,
    pub dual_res_2: f64,
    pub gap: f64,
    pub cone_gap: f64,
    pub status: String,
}

pub fn write_bench_csv<W: io::Write>(out: W, rows: &[BenchRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    if rows.is_empty() {
        w.write_record([
            "instance_id",
            "m",
            "n",
            "nnz",
            "density",
            "cone_kind",
            "mu",
            "term_mode",
            "iters",
            "time_ms",
            "prim_res_2",
            "dual_res_2",
            "gap",
            "cone_gap",
            "status",
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_bench_csv<R: io::Read>(input: R) -> csv::Result<Vec<BenchRow>> {
    csv::Reader::from_reader(input).deserialize().collect()
}
