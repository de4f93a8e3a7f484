//! Euclidean projection onto a product of Lorentz cones
//! `K_q = { w ∈ Rᵠ | w₁ ≥ ‖(w₂, …, w_q)‖₂ }`.

use crate::model::ConeSpec;
use crate::scalar::Scalar;
use crate::uv::DimensionMismatch;

/// Block offsets of a [`ConeSpec`] within an n-vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConeWorkview {
    spec: ConeSpec,
    offsets: Vec<usize>,
}

impl ConeWorkview {
    pub fn new(spec: &ConeSpec) -> Self {
        let mut offsets = Vec::with_capacity(spec.num_blocks());
        let mut at = 0;
        for &s in spec.block_sizes() {
            offsets.push(at);
            at += s;
        }
        ConeWorkview {
            spec: spec.clone(),
            offsets,
        }
    }

    pub fn spec(&self) -> &ConeSpec {
        &self.spec
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    /// Index ranges of the blocks, in order.
    pub fn blocks(&self) -> impl Iterator<Item = std::ops::Range<usize>> + '_ {
        self.offsets
            .iter()
            .zip(self.spec.block_sizes())
            .map(|(&o, &s)| o..o + s)
    }

    pub fn project<T: Scalar>(&self, w: &[T]) -> Result<Vec<T>, DimensionMismatch> {
        project_product(self, w)
    }
}

/// Projects one block in place.
pub fn project_block_in_place<T: Scalar>(w: &mut [T]) {
    let Some((head, tail)) = w.split_first_mut() else {
        return;
    };
    let w1 = *head;
    let alpha = tail.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt();
    if alpha <= -w1 {
        *head = T::zero();
        tail.iter_mut().for_each(|x| *x = T::zero());
    } else if alpha <= w1 {
        // already a member
    } else {
        // alpha > |w1| ≥ 0 here, so the division is safe.
        let two = T::one() + T::one();
        *head = w1 / two + alpha / two;
        for x in tail.iter_mut() {
            *x = *x / two + w1 * *x / (two * alpha);
        }
    }
}

pub fn project_block<T: Scalar>(w: &[T]) -> Vec<T> {
    let mut out = w.to_vec();
    project_block_in_place(&mut out);
    out
}

/// Writes `proj_K(w)` into `out`, block by block.
pub fn project_product_into<T: Scalar>(
    view: &ConeWorkview,
    w: &[T],
    out: &mut [T],
) -> Result<(), DimensionMismatch> {
    check(view, w.len())?;
    check(view, out.len())?;
    out.copy_from_slice(w);
    project_in_place_unchecked(view, out);
    Ok(())
}

pub fn project_product<T: Scalar>(
    view: &ConeWorkview,
    w: &[T],
) -> Result<Vec<T>, DimensionMismatch> {
    let mut out = vec![T::zero(); w.len()];
    project_product_into(view, w, &mut out)?;
    Ok(out)
}

pub(crate) fn project_in_place_unchecked<T: Scalar>(view: &ConeWorkview, w: &mut [T]) {
    for r in view.blocks() {
        let block = &mut w[r];
        if block.len() == 1 {
            block[0] = block[0].max(T::zero());
        } else {
            project_block_in_place(block);
        }
    }
}

/// True iff every block satisfies `w₁ ≥ ‖(w₂, …)‖₂ − tol`.
pub fn in_cone<T: Scalar>(view: &ConeWorkview, w: &[T], tol: T) -> Result<bool, DimensionMismatch> {
    check(view, w.len())?;
    Ok(view.blocks().all(|r| {
        let b = &w[r];
        let alpha = b[1..].iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt();
        b[0] >= alpha - tol
    }))
}

fn check(view: &ConeWorkview, len: usize) -> Result<(), DimensionMismatch> {
    if view.dim() == len {
        Ok(())
    } else {
        Err(DimensionMismatch {
            op: "cone projection",
            expected: view.dim(),
            actual: len,
        })
    }
}
