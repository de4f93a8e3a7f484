//! Problem data for `minimize cᵀx  s.t.  Ax = b,  x ∈ K` where `K` is a
//! product of Lorentz cones.
//!
//! All indices are zero-based. Types here are plain data; [`validate`]
//! checks every structural invariant and reports violations as values.

use std::fmt;

use crate::scalar::Scalar;

/// One stored nonzero `A[row, col] = value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triplet<T> {
    pub row: usize,
    pub col: usize,
    pub value: T,
}

impl<T> Triplet<T> {
    pub fn new(row: usize, col: usize, value: T) -> Self {
        Triplet { row, col, value }
    }
}

/// Sparse matrix as an ordered list of nonzeros.
#[derive(Debug, Clone, PartialEq)]
pub struct TripletMatrix<T> {
    num_rows: usize,
    num_cols: usize,
    entries: Vec<Triplet<T>>,
}

impl<T: Scalar> TripletMatrix<T> {
    /// Stores the entries as given. Nothing is checked here; see [`validate`].
    pub fn new(num_rows: usize, num_cols: usize, entries: Vec<Triplet<T>>) -> Self {
        TripletMatrix {
            num_rows,
            num_cols,
            entries,
        }
    }

    /// Builds from `(row, col, value)` tuples.
    pub fn from_tuples(num_rows: usize, num_cols: usize, tuples: &[(usize, usize, T)]) -> Self {
        let entries = tuples
            .iter()
            .map(|&(r, c, v)| Triplet::new(r, c, v))
            .collect();
        Self::new(num_rows, num_cols, entries)
    }

    /// Row-major dense input; exact zeros are skipped.
    pub fn from_dense(rows: &[Vec<T>]) -> Self {
        let num_rows = rows.len();
        let num_cols = rows.first().map_or(0, Vec::len);
        let mut entries = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), num_cols, "ragged dense input");
            for (j, &v) in row.iter().enumerate() {
                if v != T::zero() {
                    entries.push(Triplet::new(i, j, v));
                }
            }
        }
        let mut a = Self::new(num_rows, num_cols, entries);
        a.canonicalize();
        a
    }

    pub fn num_rows(&self) -> usize {
        self.num_rows
    }

    pub fn num_cols(&self) -> usize {
        self.num_cols
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Triplet<T>] {
        &self.entries
    }

    /// Sorts entries column-major (by column, then row).
    pub fn canonicalize(&mut self) {
        self.entries.sort_by_key(|t| (t.col, t.row));
    }

    pub fn is_canonical(&self) -> bool {
        self.entries
            .windows(2)
            .all(|w| (w[0].col, w[0].row) < (w[1].col, w[1].row))
    }

    /// Dense row-major copy. Intended for small matrices in tests and oracles.
    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut d = vec![vec![T::zero(); self.num_cols]; self.num_rows];
        for t in &self.entries {
            d[t.row][t.col] = d[t.row][t.col] + t.value;
        }
        d
    }

    /// Converts the stored values to another scalar type.
    pub fn cast<U: Scalar>(&self) -> TripletMatrix<U> {
        TripletMatrix {
            num_rows: self.num_rows,
            num_cols: self.num_cols,
            entries: self
                .entries
                .iter()
                .map(|t| Triplet::new(t.row, t.col, cast_scalar(t.value)))
                .collect(),
        }
    }
}

fn cast_scalar<T: Scalar, U: Scalar>(v: T) -> U {
    U::from_f64(v.to_f64().unwrap_or(f64::NAN)).unwrap_or_else(U::nan)
}

/// Block sizes `(n₁, …, n_κ)` of the cone product. A block of size 1 is the
/// half-line `{w | w ≥ 0}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConeSpec {
    block_sizes: Vec<usize>,
}

impl ConeSpec {
    pub fn new(block_sizes: Vec<usize>) -> Self {
        ConeSpec { block_sizes }
    }

    /// The nonnegative orthant `R₊ⁿ` as `n` blocks of size 1.
    pub fn nonnegative(n: usize) -> Self {
        ConeSpec {
            block_sizes: vec![1; n],
        }
    }

    /// `(K_q)^(n/q)`. Panics unless `q` divides `n`.
    pub fn uniform(n: usize, q: usize) -> Self {
        assert!(
            q > 0 && n.is_multiple_of(q),
            "block size {q} does not divide {n}"
        );
        ConeSpec {
            block_sizes: vec![q; n / q],
        }
    }

    pub fn block_sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    pub fn num_blocks(&self) -> usize {
        self.block_sizes.len()
    }

    pub fn dim(&self) -> usize {
        self.block_sizes.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance<T> {
    pub a: TripletMatrix<T>,
    pub b: Vec<T>,
    pub c: Vec<T>,
    pub cones: ConeSpec,
}

impl<T: Scalar> ProblemInstance<T> {
    pub fn new(a: TripletMatrix<T>, b: Vec<T>, c: Vec<T>, cones: ConeSpec) -> Self {
        ProblemInstance { a, b, c, cones }
    }

    pub fn num_rows(&self) -> usize {
        self.a.num_rows()
    }

    pub fn num_cols(&self) -> usize {
        self.a.num_cols()
    }

    pub fn validate(&self) -> ValidationReport {
        validate(self)
    }

    pub fn cast<U: Scalar>(&self) -> ProblemInstance<U> {
        ProblemInstance {
            a: self.a.cast(),
            b: self.b.iter().map(|&v| cast_scalar(v)).collect(),
            c: self.c.iter().map(|&v| cast_scalar(v)).collect(),
            cones: self.cones.clone(),
        }
    }
}

/// A broken invariant. Each variant names the offending index.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    RowOutOfRange {
        entry: usize,
        row: usize,
        m: usize,
    },
    ColOutOfRange {
        entry: usize,
        col: usize,
        n: usize,
    },
    DuplicateEntry {
        first: usize,
        second: usize,
        row: usize,
        col: usize,
    },
    ZeroValue {
        entry: usize,
    },
    NonFiniteValue {
        entry: usize,
    },
    RhsLength {
        len: usize,
        m: usize,
    },
    CostLength {
        len: usize,
        n: usize,
    },
    NonFiniteRhs {
        index: usize,
    },
    NonFiniteCost {
        index: usize,
    },
    EmptyConeBlock {
        block: usize,
    },
    ConeSizeMismatch {
        sum: usize,
        n: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::RowOutOfRange { entry, row, m } => {
                write!(f, "entry {entry}: row index {row} out of range (m={m})")
            }
            Violation::ColOutOfRange { entry, col, n } => {
                write!(f, "entry {entry}: column index {col} out of range (n={n})")
            }
            Violation::DuplicateEntry {
                first,
                second,
                row,
                col,
            } => write!(
                f,
                "duplicate entry ({row},{col}) at entries {first} and {second}"
            ),
            Violation::ZeroValue { entry } => write!(f, "entry {entry}: zero value"),
            Violation::NonFiniteValue { entry } => write!(f, "entry {entry}: non-finite value"),
            Violation::RhsLength { len, m } => write!(f, "b has length {len} ≠ m={m}"),
            Violation::CostLength { len, n } => write!(f, "c has length {len} ≠ n={n}"),
            Violation::NonFiniteRhs { index } => write!(f, "b[{index}] is non-finite"),
            Violation::NonFiniteCost { index } => write!(f, "c[{index}] is non-finite"),
            Violation::EmptyConeBlock { block } => write!(f, "cone block {block} has size 0"),
            Violation::ConeSizeMismatch { sum, n } => {
                write!(f, "cone sizes sum {sum} ≠ n={n}")
            }
        }
    }
}

/// Conditions that do not make the instance invalid but are worth reporting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Warning {
    /// Row with no nonzeros; feasibility then requires `b[row] = 0`.
    EmptyRow { row: usize },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Warning::EmptyRow { row } => write!(f, "row {row} has no nonzeros"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub warnings: Vec<Warning>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks every structural invariant of `p`. Pure and deterministic.
pub fn validate<T: Scalar>(p: &ProblemInstance<T>) -> ValidationReport {
    let mut report = ValidationReport::default();
    let m = p.a.num_rows();
    let n = p.a.num_cols();
    let v = &mut report.violations;

    let mut row_seen = vec![false; m];
    for (k, t) in p.a.entries().iter().enumerate() {
        if t.row >= m {
            v.push(Violation::RowOutOfRange {
                entry: k,
                row: t.row,
                m,
            });
        } else {
            row_seen[t.row] = true;
        }
        if t.col >= n {
            v.push(Violation::ColOutOfRange {
                entry: k,
                col: t.col,
                n,
            });
        }
        if !t.value.is_finite() {
            v.push(Violation::NonFiniteValue { entry: k });
        } else if t.value == T::zero() {
            v.push(Violation::ZeroValue { entry: k });
        }
    }

    let mut order: Vec<usize> = (0..p.a.nnz()).collect();
    let e = p.a.entries();
    order.sort_by_key(|&k| (e[k].col, e[k].row, k));
    for w in order.windows(2) {
        let (a, b) = (&e[w[0]], &e[w[1]]);
        if a.row == b.row && a.col == b.col {
            v.push(Violation::DuplicateEntry {
                first: w[0],
                second: w[1],
                row: a.row,
                col: a.col,
            });
        }
    }

    if p.b.len() != m {
        v.push(Violation::RhsLength { len: p.b.len(), m });
    }
    if p.c.len() != n {
        v.push(Violation::CostLength { len: p.c.len(), n });
    }
    for (i, x) in p.b.iter().enumerate() {
        if !x.is_finite() {
            v.push(Violation::NonFiniteRhs { index: i });
        }
    }
    for (j, x) in p.c.iter().enumerate() {
        if !x.is_finite() {
            v.push(Violation::NonFiniteCost { index: j });
        }
    }

    for (i, &s) in p.cones.block_sizes().iter().enumerate() {
        if s == 0 {
            v.push(Violation::EmptyConeBlock { block: i });
        }
    }
    let sum = p.cones.dim();
    if sum != n {
        v.push(Violation::ConeSizeMismatch { sum, n });
    }

    report.warnings = row_seen
        .iter()
        .enumerate()
        .filter(|(_, &seen)| !seen)
        .map(|(row, _)| Warning::EmptyRow { row })
        .collect();
    report
}
