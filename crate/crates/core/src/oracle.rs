//! Dense reference implementation used to check the matrix-free path.
//!
//! `U`, `V` and `A` are materialised as row-major dense matrices, the
//! diagonal factors are read off the dense Gram matrices, and one ADMM
//! iteration is evaluated with dense matrix-vector products. Only diagonal
//! inverses are taken; there is no general linear solve anywhere here.

use thiserror::Error;

use crate::admm::{SolverConfig, SolverState};
use crate::cones::{project_product, ConeWorkview};
use crate::model::{ConeSpec, ProblemInstance};
use crate::scalar::Scalar;
use crate::uv::UvFactors;

pub const DEFAULT_CAP: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("dense mirror limited to dimensions ≤ {cap}, got m={m}, n={n}")]
    CapExceeded { m: usize, n: usize, cap: usize },
    #[error("state dimensions do not match the mirrored problem")]
    StateDimension,
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, T::one());
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            m.data[i * c..(i + 1) * c].copy_from_slice(row);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    /// `self · x`, summing each row left to right.
    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    /// `selfᵀ · x`, summing over rows top to bottom.
    pub fn matvec_t(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.rows);
        (0..self.cols)
            .map(|j| (0..self.rows).fold(T::zero(), |acc, i| acc + self.get(i, j) * x[i]))
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                for j in 0..other.cols {
                    let idx = i * out.cols + j;
                    out.data[idx] = out.data[idx] + a * other.get(k, j);
                }
            }
        }
        out
    }

    /// `self · otherᵀ`, skipping terms whose factors are zero. The inner
    /// index runs in increasing order, so the result equals the plain dense
    /// product while costing `O(nnz(self) · other.rows)`.
    pub fn mul_transpose(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.cols);
        let mut out = Self::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.rows {
                    let b = other.get(j, k);
                    if b != T::zero() {
                        let idx = i * out.cols + j;
                        out.data[idx] = out.data[idx] + a * b;
                    }
                }
            }
        }
        out
    }

    /// `self · selfᵀ`.
    pub fn gram(&self) -> Self {
        self.mul_transpose(self)
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.rows.min(self.cols))
            .map(|i| self.get(i, i))
            .collect()
    }

    /// Positions `(i, j)`, `i ≠ j`, holding a nonzero.
    pub fn off_diagonal_nonzeros(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.rows {
            for j in 0..self.cols {
                if i != j && self.get(i, j) != T::zero() {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs()))
    }
}

/// Dense `U` (m×o) and `V` (n×o) built entry by entry from the factors.
pub fn dense_uv<T: Scalar>(f: &UvFactors<T>) -> (DenseMatrix<T>, DenseMatrix<T>) {
    let mut u = DenseMatrix::zeros(f.m(), f.o());
    let mut v = DenseMatrix::zeros(f.n(), f.o());
    for k in 0..f.o() {
        u.set(f.row_of()[k], k, f.values()[k]);
        v.set(f.col_of()[k], k, T::one());
    }
    (u, v)
}

/// Explicit-matrix copy of a problem and its UV factors.
#[derive(Debug, Clone)]
pub struct DenseMirror<T> {
    pub a: DenseMatrix<T>,
    pub u: DenseMatrix<T>,
    pub v: DenseMatrix<T>,
    pub b: Vec<T>,
    pub c: Vec<T>,
    pub cones: ConeSpec,
    /// Diagonal of `(I + UUᵀ)⁻¹`, read off the dense Gram matrix.
    pub fu: Vec<T>,
    /// Diagonal of `(I + VVᵀ)⁻¹`, read off the dense Gram matrix.
    pub fv: Vec<T>,
    view: ConeWorkview,
}

/// [`dense_assemble_with_cap`] with [`DEFAULT_CAP`].
pub fn dense_assemble<T: Scalar>(
    p: &ProblemInstance<T>,
    f: &UvFactors<T>,
) -> Result<DenseMirror<T>, OracleError> {
    dense_assemble_with_cap(p, f, DEFAULT_CAP)
}

pub fn dense_assemble_with_cap<T: Scalar>(
    p: &ProblemInstance<T>,
    f: &UvFactors<T>,
    cap: usize,
) -> Result<DenseMirror<T>, OracleError> {
    let (m, n) = (f.m(), f.n());
    if m > cap || n > cap {
        return Err(OracleError::CapExceeded { m, n, cap });
    }
    let (u, v) = dense_uv(f);
    let inv = |g: DenseMatrix<T>| -> Vec<T> {
        g.diagonal()
            .into_iter()
            .map(|d| T::one() / (T::one() + d))
            .collect()
    };
    let fu = inv(u.gram());
    let fv = inv(v.gram());
    Ok(DenseMirror {
        a: DenseMatrix::from_rows(&p.a.to_dense()),
        u,
        v,
        b: p.b.clone(),
        c: p.c.clone(),
        cones: p.cones.clone(),
        fu,
        fv,
        view: ConeWorkview::new(&p.cones),
    })
}

/// One ADMM iteration with dense products, in the solver's update order.
#[allow(clippy::needless_range_loop)]
pub fn dense_iterate<T: Scalar>(
    mirror: &DenseMirror<T>,
    state: &SolverState<T>,
    cfg: &SolverConfig<T>,
) -> Result<SolverState<T>, OracleError> {
    let (m, n, o) = (mirror.u.rows(), mirror.v.rows(), mirror.u.cols());
    if state.x.len() != n
        || state.z.len() != n
        || state.delta.len() != n
        || state.y.len() != o
        || state.gamma.len() != o
        || state.lambda.len() != m
    {
        return Err(OracleError::StateDimension);
    }
    let mu = cfg.mu;
    let mut s = state.clone();

    let g: Vec<T> =
        s.y.iter()
            .zip(&s.gamma)
            .map(|(&y, &gm)| y + gm / mu)
            .collect();
    let vg = mirror.v.matvec(&g);
    for j in 0..n {
        let rhs = vg[j] + s.z[j] + s.delta[j] / mu - mirror.c[j] / mu;
        s.x[j] = mirror.fv[j] * rhs;
    }

    let w: Vec<T> = mirror
        .b
        .iter()
        .zip(&s.lambda)
        .map(|(&b, &l)| b - l / mu)
        .collect();
    let utw = mirror.u.matvec_t(&w);
    let vtx = mirror.v.matvec_t(&s.x);
    let t: Vec<T> = (0..o).map(|k| utw[k] + vtx[k] - s.gamma[k] / mu).collect();
    let scaled: Vec<T> = mirror
        .u
        .matvec(&t)
        .iter()
        .zip(&mirror.fu)
        .map(|(&v, &f)| f * v)
        .collect();
    let correction = mirror.u.matvec_t(&scaled);
    s.y = t.iter().zip(&correction).map(|(&a, &b)| a - b).collect();

    let shifted: Vec<T> =
        s.x.iter()
            .zip(&s.delta)
            .map(|(&x, &d)| x - d / mu)
            .collect();
    s.z = project_product(&mirror.view, &shifted).expect("length n");

    let uy = mirror.u.matvec(&s.y);
    for i in 0..m {
        s.lambda[i] = s.lambda[i] + mu * (uy[i] - mirror.b[i]);
    }
    let vtx = mirror.v.matvec_t(&s.x);
    for k in 0..o {
        s.gamma[k] = s.gamma[k] + mu * (s.y[k] - vtx[k]);
    }
    for j in 0..n {
        s.delta[j] = s.delta[j] + mu * (s.z[j] - s.x[j]);
    }
    s.iter += 1;
    Ok(s)
}

/// `iters` consecutive dense iterations.
pub fn dense_run<T: Scalar>(
    mirror: &DenseMirror<T>,
    state: &SolverState<T>,
    cfg: &SolverConfig<T>,
    iters: usize,
) -> Result<SolverState<T>, OracleError> {
    let mut s = state.clone();
    for _ in 0..iters {
        s = dense_iterate(mirror, &s, cfg)?;
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TripletMatrix;
    use crate::uv::build_uv;

    fn example1() -> ProblemInstance<f64> {
        let a = TripletMatrix::from_dense(&[
            vec![1.0, 0.0, 4.0, 6.0, 8.0],
            vec![0.0, 0.0, 5.0, 0.0, 0.0],
            vec![2.0, 3.0, 0.0, 7.0, 0.0],
        ]);
        ProblemInstance::new(a, vec![0.0; 3], vec![0.0; 5], ConeSpec::nonnegative(5))
    }

    #[test]
    fn example1_matches_printed_factors() {
        let p = example1();
        let mirror = dense_assemble(&p, &build_uv(&p.a)).unwrap();
        let u = DenseMatrix::from_rows(&[
            vec![1.0, 0.0, 0.0, 4.0, 0.0, 6.0, 0.0, 8.0],
            vec![0.0, 0.0, 0.0, 0.0, 5.0, 0.0, 0.0, 0.0],
            vec![0.0, 2.0, 3.0, 0.0, 0.0, 0.0, 7.0, 0.0],
        ]);
        let v = DenseMatrix::from_rows(&[
            vec![1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0],
            vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
        ]);
        assert_eq!(mirror.u, u);
        assert_eq!(mirror.v, v);
        assert_eq!(mirror.u.mul_transpose(&mirror.v), mirror.a);
        assert!(mirror.u.gram().off_diagonal_nonzeros().is_empty());
        assert!(mirror.v.gram().off_diagonal_nonzeros().is_empty());
    }

    #[test]
    fn empty_column_gives_unit_factor() {
        let a = TripletMatrix::from_tuples(2, 3, &[(0, 0, 1.0), (1, 2, -2.0)]);
        let p = ProblemInstance::new(a, vec![0.0; 2], vec![0.0; 3], ConeSpec::nonnegative(3));
        let mirror = dense_assemble(&p, &build_uv(&p.a)).unwrap();
        assert_eq!(mirror.v.row(1), &[0.0, 0.0]);
        assert_eq!(mirror.v.gram().get(1, 1), 0.0);
        assert_eq!(mirror.fv[1], 1.0);
    }

    #[test]
    fn cap_is_enforced() {
        let a = TripletMatrix::from_tuples(1, 65, &[(0, 0, 1.0)]);
        let p = ProblemInstance::new(a, vec![0.0], vec![0.0; 65], ConeSpec::nonnegative(65));
        let f = build_uv(&p.a);
        assert_eq!(
            dense_assemble(&p, &f).unwrap_err(),
            OracleError::CapExceeded {
                m: 1,
                n: 65,
                cap: 64
            }
        );
        assert!(dense_assemble_with_cap(&p, &f, 100).is_ok());
    }

    #[test]
    fn zero_problem_stays_at_zero() {
        let a = TripletMatrix::from_tuples(2, 2, &[(0, 0, 1.0), (1, 1, 3.0), (0, 1, -1.0)]);
        let p = ProblemInstance::new(a, vec![0.0; 2], vec![0.0; 2], ConeSpec::nonnegative(2));
        let f = build_uv(&p.a);
        let mirror = dense_assemble(&p, &f).unwrap();
        let s0 = SolverState::for_factors(&f);
        let s1 = dense_iterate(&mirror, &s0, &SolverConfig::default()).unwrap();
        assert_eq!(s1.x, s0.x);
        assert_eq!(s1.y, s0.y);
        assert_eq!(s1.lambda, s0.lambda);
        assert_eq!(s1.iter, 1);
    }

    #[test]
    fn inversion_lemma_identity() {
        let p = example1();
        let f = build_uv(&p.a);
        let (u, _) = dense_uv(&f);
        let o = f.o();
        let utu = u.transpose().matmul(&u);
        let mut lhs = DenseMatrix::<f64>::identity(o);
        for i in 0..o {
            for j in 0..o {
                lhs.set(i, j, lhs.get(i, j) + utu.get(i, j));
            }
        }
        // I − Uᵀ F_U U
        let mut fu_u = u.clone();
        for i in 0..u.rows() {
            for k in 0..o {
                fu_u.set(i, k, f.fu_diag()[i] * u.get(i, k));
            }
        }
        let corr = u.transpose().matmul(&fu_u);
        let mut rhs = DenseMatrix::identity(o);
        for i in 0..o {
            for j in 0..o {
                rhs.set(i, j, rhs.get(i, j) - corr.get(i, j));
            }
        }
        let prod = lhs.matmul(&rhs);
        assert!(prod.max_abs_diff(&DenseMatrix::identity(o)) < 1e-10);
    }

    #[test]
    fn state_shape_is_checked() {
        let p = example1();
        let f = build_uv(&p.a);
        let mirror = dense_assemble(&p, &f).unwrap();
        let bad = SolverState::zeros(3, 5, 7);
        assert_eq!(
            dense_iterate(&mirror, &bad, &SolverConfig::default()).unwrap_err(),
            OracleError::StateDimension
        );
    }
}
