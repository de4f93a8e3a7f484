//! UV decomposition `A = U·Vᵀ` with one nonzero per column of `U` and of `V`.
//!
//! For the `k`-th stored nonzero `a_k = A[i_k, j_k]`, column `k` of `U`
//! (m×o) holds `a_k` at row `i_k` and column `k` of `V` (n×o) holds `1` at
//! row `j_k`. Both `UUᵀ` and `VVᵀ` are then diagonal:
//!
//! ```text
//! (UUᵀ)_ii = Σ_{k: i_k = i} a_k²        (VVᵀ)_jj = |{k : j_k = j}|
//! ```
//!
//! so `(I + UUᵀ)⁻¹` and `(I + VVᵀ)⁻¹` are stored as two vectors of
//! reciprocals. Neither `U` nor `V` is ever formed: products with them are
//! gathers (`Uᵀ`, `Vᵀ`) and per-group scatter-adds (`U`, `V`).
//!
//! Nonzeros are numbered in column-major order (by column, then row). Every
//! scatter-add sums its group sequentially in increasing `k`, so results are
//! bit-reproducible.

use std::ops::Range;

use thiserror::Error;

use crate::model::TripletMatrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{op}: expected vector of length {expected}, got {actual}")]
pub struct DimensionMismatch {
    pub op: &'static str,
    pub expected: usize,
    pub actual: usize,
}

fn check_len(op: &'static str, expected: usize, actual: usize) -> Result<(), DimensionMismatch> {
    if expected == actual {
        Ok(())
    } else {
        Err(DimensionMismatch {
            op,
            expected,
            actual,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UvFactors<T> {
    m: usize,
    n: usize,
    row_of: Vec<usize>,
    col_of: Vec<usize>,
    val: Vec<T>,
    fu_diag: Vec<T>,
    fv_diag: Vec<T>,
    // k indices of row i are row_perm[row_ptr[i]..row_ptr[i + 1]], ascending.
    row_ptr: Vec<usize>,
    row_perm: Vec<usize>,
    // k indices of column j are the contiguous range col_ptr[j]..col_ptr[j + 1].
    col_ptr: Vec<usize>,
}

/// Builds the UV factors of a valid matrix. Entries are renumbered into
/// column-major order regardless of the order they are stored in `a`.
pub fn build_uv<T: Scalar>(a: &TripletMatrix<T>) -> UvFactors<T> {
    let (m, n) = (a.num_rows(), a.num_cols());
    let mut entries = a.entries().to_vec();
    if !a.is_canonical() {
        entries.sort_by_key(|t| (t.col, t.row));
    }
    let o = entries.len();

    let row_of: Vec<usize> = entries.iter().map(|t| t.row).collect();
    let col_of: Vec<usize> = entries.iter().map(|t| t.col).collect();
    let val: Vec<T> = entries.iter().map(|t| t.value).collect();

    let mut col_ptr = vec![0usize; n + 1];
    for &j in &col_of {
        col_ptr[j + 1] += 1;
    }
    for j in 0..n {
        col_ptr[j + 1] += col_ptr[j];
    }

    let mut row_ptr = vec![0usize; m + 1];
    for &i in &row_of {
        row_ptr[i + 1] += 1;
    }
    for i in 0..m {
        row_ptr[i + 1] += row_ptr[i];
    }
    let mut fill = row_ptr.clone();
    let mut row_perm = vec![0usize; o];
    for (k, &i) in row_of.iter().enumerate() {
        row_perm[fill[i]] = k;
        fill[i] += 1;
    }

    let fu_diag = (0..m)
        .map(|i| {
            let sq = row_perm[row_ptr[i]..row_ptr[i + 1]]
                .iter()
                .fold(T::zero(), |acc, &k| acc + val[k] * val[k]);
            T::one() / (T::one() + sq)
        })
        .collect();
    let fv_diag = (0..n)
        .map(|j| T::one() / (T::one() + T::from_count(col_ptr[j + 1] - col_ptr[j])))
        .collect();

    UvFactors {
        m,
        n,
        row_of,
        col_of,
        val,
        fu_diag,
        fv_diag,
        row_ptr,
        row_perm,
        col_ptr,
    }
}

impl<T: Scalar> UvFactors<T> {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of nonzeros, the inner dimension of the decomposition.
    pub fn o(&self) -> usize {
        self.val.len()
    }

    pub fn row_of(&self) -> &[usize] {
        &self.row_of
    }

    pub fn col_of(&self) -> &[usize] {
        &self.col_of
    }

    pub fn values(&self) -> &[T] {
        &self.val
    }

    /// Diagonal of `(I + UUᵀ)⁻¹`.
    pub fn fu_diag(&self) -> &[T] {
        &self.fu_diag
    }

    /// Diagonal of `(I + VVᵀ)⁻¹`.
    pub fn fv_diag(&self) -> &[T] {
        &self.fv_diag
    }

    /// Nonzero indices `k` with `i_k = i`, ascending.
    pub fn row_group(&self, i: usize) -> &[usize] {
        &self.row_perm[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    /// Nonzero indices `k` with `j_k = j`.
    pub fn col_group(&self, j: usize) -> Range<usize> {
        self.col_ptr[j]..self.col_ptr[j + 1]
    }

    /// `U·y`, length m.
    pub fn apply_u(&self, y: &[T]) -> Result<Vec<T>, DimensionMismatch> {
        let mut out = vec![T::zero(); self.m];
        self.apply_u_into(y, &mut out)?;
        Ok(out)
    }

    pub fn apply_u_into(&self, y: &[T], out: &mut [T]) -> Result<(), DimensionMismatch> {
        check_len("apply_u input", self.o(), y.len())?;
        check_len("apply_u output", self.m, out.len())?;
        self.u_mul(y, out);
        Ok(())
    }

    /// `Uᵀ·s`, length o.
    pub fn apply_ut(&self, s: &[T]) -> Result<Vec<T>, DimensionMismatch> {
        let mut out = vec![T::zero(); self.o()];
        self.apply_ut_into(s, &mut out)?;
        Ok(out)
    }

    pub fn apply_ut_into(&self, s: &[T], out: &mut [T]) -> Result<(), DimensionMismatch> {
        check_len("apply_ut input", self.m, s.len())?;
        check_len("apply_ut output", self.o(), out.len())?;
        self.ut_mul(s, out);
        Ok(())
    }

    /// `V·g`, length n.
    pub fn apply_v(&self, g: &[T]) -> Result<Vec<T>, DimensionMismatch> {
        let mut out = vec![T::zero(); self.n];
        self.apply_v_into(g, &mut out)?;
        Ok(out)
    }

    pub fn apply_v_into(&self, g: &[T], out: &mut [T]) -> Result<(), DimensionMismatch> {
        check_len("apply_v input", self.o(), g.len())?;
        check_len("apply_v output", self.n, out.len())?;
        self.v_mul(g, out);
        Ok(())
    }

    /// `Vᵀ·x`, length o.
    pub fn apply_vt(&self, x: &[T]) -> Result<Vec<T>, DimensionMismatch> {
        let mut out = vec![T::zero(); self.o()];
        self.apply_vt_into(x, &mut out)?;
        Ok(out)
    }

    pub fn apply_vt_into(&self, x: &[T], out: &mut [T]) -> Result<(), DimensionMismatch> {
        check_len("apply_vt input", self.n, x.len())?;
        check_len("apply_vt output", self.o(), out.len())?;
        self.vt_mul(x, out);
        Ok(())
    }

    /// `(I + UᵀU)⁻¹·t` via `t − Uᵀ·(F_U ⊙ U·t)`.
    pub fn apply_y_factor(&self, t: &[T]) -> Result<Vec<T>, DimensionMismatch> {
        let mut out = vec![T::zero(); self.o()];
        let mut scratch = vec![T::zero(); self.m];
        self.apply_y_factor_into(t, &mut out, &mut scratch)?;
        Ok(out)
    }

    /// As [`apply_y_factor`](Self::apply_y_factor); `scratch` must have length m.
    pub fn apply_y_factor_into(
        &self,
        t: &[T],
        out: &mut [T],
        scratch: &mut [T],
    ) -> Result<(), DimensionMismatch> {
        check_len("apply_y_factor input", self.o(), t.len())?;
        check_len("apply_y_factor output", self.o(), out.len())?;
        check_len("apply_y_factor scratch", self.m, scratch.len())?;
        self.y_factor(t, out, scratch);
        Ok(())
    }

    /// `A·x` computed as `U·(Vᵀx)` without the intermediate vector.
    /// Bitwise equal to `apply_u(apply_vt(x))`.
    pub fn apply_a_into(&self, x: &[T], out: &mut [T]) -> Result<(), DimensionMismatch> {
        check_len("apply_a input", self.n, x.len())?;
        check_len("apply_a output", self.m, out.len())?;
        self.a_mul(x, out);
        Ok(())
    }

    /// `Aᵀ·s` computed as `V·(Uᵀs)` without the intermediate vector.
    /// Bitwise equal to `apply_v(apply_ut(s))`.
    pub fn apply_at_into(&self, s: &[T], out: &mut [T]) -> Result<(), DimensionMismatch> {
        check_len("apply_at input", self.m, s.len())?;
        check_len("apply_at output", self.n, out.len())?;
        self.at_mul(s, out);
        Ok(())
    }

    // Unchecked kernels. Callers guarantee lengths.

    // Scatter-adds in k order: each row still sums its terms in ascending
    // k, as a row_group fold would, but the o-length arrays stream.
    pub(crate) fn u_mul(&self, y: &[T], out: &mut [T]) {
        out.fill(T::zero());
        for ((&i, &a), &yk) in self.row_of.iter().zip(&self.val).zip(y) {
            out[i] = out[i] + a * yk;
        }
    }

    pub(crate) fn ut_mul(&self, s: &[T], out: &mut [T]) {
        for ((o, &a), &i) in out.iter_mut().zip(&self.val).zip(&self.row_of) {
            *o = a * s[i];
        }
    }

    pub(crate) fn v_mul(&self, g: &[T], out: &mut [T]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = g[self.col_group(j)]
                .iter()
                .fold(T::zero(), |acc, &gk| acc + gk);
        }
    }

    pub(crate) fn vt_mul(&self, x: &[T], out: &mut [T]) {
        for (o, &j) in out.iter_mut().zip(&self.col_of) {
            *o = x[j];
        }
    }

    pub(crate) fn y_factor(&self, t: &[T], out: &mut [T], scratch: &mut [T]) {
        self.u_mul(t, scratch);
        for (s, &f) in scratch.iter_mut().zip(&self.fu_diag) {
            *s = f * *s;
        }
        for (k, o) in out.iter_mut().enumerate() {
            *o = t[k] - self.val[k] * scratch[self.row_of[k]];
        }
    }

    pub(crate) fn a_mul(&self, x: &[T], out: &mut [T]) {
        out.fill(T::zero());
        for ((&i, &a), &j) in self.row_of.iter().zip(&self.val).zip(&self.col_of) {
            out[i] = out[i] + a * x[j];
        }
    }

    pub(crate) fn at_mul(&self, s: &[T], out: &mut [T]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = self
                .col_group(j)
                .fold(T::zero(), |acc, k| acc + self.val[k] * s[self.row_of[k]]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TripletMatrix;

    fn example1() -> UvFactors<f64> {
        build_uv(&TripletMatrix::from_dense(&[
            vec![1.0, 0.0, 4.0, 6.0, 8.0],
            vec![0.0, 0.0, 5.0, 0.0, 0.0],
            vec![2.0, 3.0, 0.0, 7.0, 0.0],
        ]))
    }

    #[test]
    fn example1_layout() {
        let f = example1();
        assert_eq!((f.m(), f.n(), f.o()), (3, 5, 8));
        assert_eq!(f.values(), &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        assert_eq!(f.row_of(), &[0, 2, 2, 0, 1, 0, 2, 0]);
        assert_eq!(f.col_of(), &[0, 0, 1, 2, 2, 3, 3, 4]);
        assert_eq!(f.fu_diag(), &[1.0 / 118.0, 1.0 / 26.0, 1.0 / 63.0]);
        assert_eq!(
            f.fv_diag(),
            &[1.0 / 3.0, 1.0 / 2.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 2.0]
        );
        assert_eq!(f.row_group(0), &[0, 3, 5, 7]);
        assert_eq!(f.col_group(3), 5..7);
    }

    #[test]
    fn example1_products() {
        let f = example1();
        assert_eq!(f.apply_u(&[1.0; 8]).unwrap(), vec![19.0, 5.0, 12.0]);
        assert_eq!(
            f.apply_ut(&[1.0; 3]).unwrap(),
            vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]
        );
        assert_eq!(
            f.apply_v(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0])
                .unwrap(),
            vec![3.0, 3.0, 9.0, 13.0, 8.0]
        );
        assert_eq!(
            f.apply_vt(&[10.0, 20.0, 30.0, 40.0, 50.0]).unwrap(),
            vec![10.0, 10.0, 20.0, 30.0, 30.0, 40.0, 40.0, 50.0]
        );
    }

    #[test]
    fn zero_inputs_give_zero() {
        let f = example1();
        assert_eq!(f.apply_u(&[0.0; 8]).unwrap(), vec![0.0; 3]);
        assert_eq!(f.apply_ut(&[0.0; 3]).unwrap(), vec![0.0; 8]);
        assert_eq!(f.apply_v(&[0.0; 8]).unwrap(), vec![0.0; 5]);
        assert_eq!(f.apply_vt(&[0.0; 5]).unwrap(), vec![0.0; 8]);
        assert_eq!(f.apply_y_factor(&[0.0; 8]).unwrap(), vec![0.0; 8]);
    }

    #[test]
    fn single_entry() {
        let f = build_uv(&TripletMatrix::from_tuples(1, 1, &[(0, 0, 5.0f64)]));
        assert_eq!(f.o(), 1);
        assert_eq!(f.fu_diag(), &[1.0 / 26.0]);
        assert_eq!(f.fv_diag(), &[0.5]);
        // (I + UᵀU)⁻¹ = 1/26, so 26 maps to 1.
        let y = f.apply_y_factor(&[26.0]).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dimension_errors() {
        let f = example1();
        let err = f.apply_u(&[1.0; 3]).unwrap_err();
        assert_eq!(err.expected, 8);
        assert_eq!(err.actual, 3);
        assert!(f.apply_ut(&[1.0; 8]).is_err());
        assert!(f.apply_v(&[1.0; 5]).is_err());
        assert!(f.apply_vt(&[1.0; 8]).is_err());
        assert!(f.apply_y_factor(&[1.0; 3]).is_err());
        let mut out = vec![0.0; 2];
        assert!(f.apply_a_into(&[0.0; 5], &mut out).is_err());
    }

    #[test]
    fn empty_rows_and_columns() {
        let f = build_uv(&TripletMatrix::from_tuples(3, 3, &[(1, 1, 2.0f64)]));
        assert_eq!(f.fu_diag(), &[1.0, 0.2, 1.0]);
        assert_eq!(f.fv_diag(), &[1.0, 0.5, 1.0]);
        assert_eq!(f.apply_u(&[3.0]).unwrap(), vec![0.0, 6.0, 0.0]);
        assert_eq!(f.apply_v(&[3.0]).unwrap(), vec![0.0, 3.0, 0.0]);
    }

    #[test]
    fn unordered_input_is_renumbered() {
        let a = TripletMatrix::from_tuples(2, 2, &[(1, 1, 4.0f64), (0, 0, 1.0), (1, 0, 2.0)]);
        let f = build_uv(&a);
        assert_eq!(f.values(), &[1.0, 2.0, 4.0]);
        assert_eq!(f.row_of(), &[0, 1, 1]);
    }

    #[test]
    fn fused_products_match_composition() {
        let f = example1();
        let x = [0.3, -1.7, 2.5, 0.125, -9.0];
        let mut ax = vec![0.0; 3];
        f.apply_a_into(&x, &mut ax).unwrap();
        assert_eq!(ax, f.apply_u(&f.apply_vt(&x).unwrap()).unwrap());
        let s = [1.5, -0.25, 3.0];
        let mut ats = vec![0.0; 5];
        f.apply_at_into(&s, &mut ats).unwrap();
        assert_eq!(ats, f.apply_v(&f.apply_ut(&s).unwrap()).unwrap());
    }

    #[test]
    fn works_in_f32() {
        let f = build_uv(&TripletMatrix::from_tuples(
            1,
            2,
            &[(0, 0, 2.0f32), (0, 1, 1.0)],
        ));
        assert_eq!(f.fu_diag(), &[1.0f32 / 6.0]);
        assert_eq!(f.apply_u(&[1.0, 1.0]).unwrap(), vec![3.0f32]);
    }
}
