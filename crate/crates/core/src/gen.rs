//! Seeded random LP / SOCP instances that are feasible by construction.
//!
//! Random stream: ChaCha8 seeded with `ChaCha8Rng::seed_from_u64(seed)`.
//! Derived draws, in this order:
//!
//! 1. `nnz` distinct positions of the m×n grid (row-major index `i·n + j`),
//!    by a partial Fisher–Yates shuffle of `0..m·n`. Step `t` draws
//!    `r = t + below(m·n − t)` and swaps slots `t` and `r`; only touched
//!    slots are stored.
//! 2. `nnz` standard normal values, assigned to positions in sampling order.
//! 3. `ẋ`: n standard normals. `b = A·proj_K(ẋ)`.
//! 4. Bounded mode: `λ̇` (m normals) then `s` (n normals), and
//!    `c = −Aᵀλ̇ + proj_K(s)`. Raw mode: `c` is n standard normals.
//!
//! `below(k)` rejects raw 64-bit words below `2⁶⁴ mod k` and returns
//! `word mod k`. Normals use Box–Muller on two 53-bit uniforms
//! `u₁ ∈ (0, 1]`, `u₂ ∈ [0, 1)`: `√(−2 ln u₁)·cos(2πu₂)` then
//! `√(−2 ln u₁)·sin(2πu₂)`.

use std::collections::HashMap;
use std::fmt;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cones::{project_product, ConeWorkview};
use crate::model::{ConeSpec, ProblemInstance, Triplet, TripletMatrix};
use crate::uv::build_uv;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConeKind {
    /// `K = R₊ⁿ`
    Lp,
    /// `K = (K₄)^(n/4)`
    Socp4,
}

impl ConeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ConeKind::Lp => "lp",
            ConeKind::Socp4 => "socp4",
        }
    }

    pub fn cone_spec(self, n: usize) -> ConeSpec {
        match self {
            ConeKind::Lp => ConeSpec::nonnegative(n),
            ConeKind::Socp4 => ConeSpec::uniform(n, 4),
        }
    }
}

impl fmt::Display for ConeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ConeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lp" => Ok(ConeKind::Lp),
            "socp4" => Ok(ConeKind::Socp4),
            other => Err(format!(
                "unknown cone kind '{other}' (expected lp or socp4)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub m: usize,
    pub n: usize,
    /// Fraction of nonzero positions, in `(0, 1]`.
    pub density: f64,
    pub cone_kind: ConeKind,
    pub seed: u64,
    /// Draw `c` so that a dual-feasible point exists (bounded optimum).
    pub bounded_mode: bool,
}

impl GenSpec {
    pub fn new(m: usize, n: usize, density: f64, cone_kind: ConeKind, seed: u64) -> Self {
        GenSpec {
            m,
            n,
            density,
            cone_kind,
            seed,
            bounded_mode: true,
        }
    }

    /// `round(m·n·density)`.
    pub fn nnz(&self) -> usize {
        (self.m as f64 * self.n as f64 * self.density).round() as usize
    }

    pub fn validate(&self) -> Result<(), GenError> {
        if self.m == 0 || self.n == 0 {
            return Err(GenError::EmptyShape);
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(GenError::Density(self.density));
        }
        if self.cone_kind == ConeKind::Socp4 && !self.n.is_multiple_of(4) {
            return Err(GenError::Socp4Width(self.n));
        }
        let nnz = self.nnz();
        if nnz == 0 {
            return Err(GenError::NoNonzeros);
        }
        let cells = self.m as u128 * self.n as u128;
        if nnz as u128 > cells {
            return Err(GenError::TooManyNonzeros { nnz, cells });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenError {
    #[error("m and n must both be positive")]
    EmptyShape,
    #[error("density {0} outside (0, 1]")]
    Density(f64),
    #[error("socp4 requires n divisible by 4, got n={0}")]
    Socp4Width(usize),
    #[error("m·n·density rounds to zero nonzeros")]
    NoNonzeros,
    #[error("{nnz} nonzeros do not fit in {cells} positions")]
    TooManyNonzeros { nnz: usize, cells: u128 },
}

/// Generated problem plus the witnesses used to build it.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedInstance {
    pub problem: ProblemInstance<f64>,
    /// `proj_K(ẋ)`: satisfies `A·x̂ = b` and `x̂ ∈ K`.
    pub primal_witness: Vec<f64>,
    /// `(λ̇, ṡ)` with `Aᵀλ̇ + c = ṡ ∈ K`; bounded mode only.
    pub dual_witness: Option<(Vec<f64>, Vec<f64>)>,
}

/// Portable draws on top of ChaCha8; see the module docs for the transforms.
#[derive(Debug, Clone)]
pub struct InstanceRng {
    inner: ChaCha8Rng,
    spare: Option<f64>,
}

impl InstanceRng {
    pub fn new(seed: u64) -> Self {
        InstanceRng {
            inner: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn next_unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..bound`. Panics if `bound == 0`.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "empty range");
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let r = self.next_u64();
            if r >= threshold {
                return r % bound;
            }
        }
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = 1.0 - self.next_unit();
        let u2 = self.next_unit();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }

    pub fn normals(&mut self, len: usize) -> Vec<f64> {
        (0..len).map(|_| self.normal()).collect()
    }
}

/// `count` distinct values from `0..total`, in sampling order.
pub fn sample_positions(rng: &mut InstanceRng, total: u64, count: usize) -> Vec<u64> {
    assert!(count as u64 <= total);
    let mut swapped: HashMap<u64, u64> = HashMap::with_capacity(count * 2);
    let mut out = Vec::with_capacity(count);
    for t in 0..count as u64 {
        let r = t + rng.below(total - t);
        let at_r = swapped.get(&r).copied().unwrap_or(r);
        let at_t = swapped.remove(&t).unwrap_or(t);
        swapped.insert(r, at_t);
        out.push(at_r);
    }
    out
}

pub fn generate(spec: &GenSpec) -> Result<GeneratedInstance, GenError> {
    spec.validate()?;
    let (m, n) = (spec.m, spec.n);
    let nnz = spec.nnz();
    let mut rng = InstanceRng::new(spec.seed);

    let positions = sample_positions(&mut rng, m as u64 * n as u64, nnz);
    let mut entries: Vec<Triplet<f64>> = positions
        .iter()
        .map(|&p| {
            let row = (p / n as u64) as usize;
            let col = (p % n as u64) as usize;
            Triplet::new(row, col, rng.normal())
        })
        .collect();
    // A standard normal draw of exactly zero has probability ~2⁻⁵³; replace it
    // by a fresh draw so the zero-free invariant holds unconditionally.
    for t in entries.iter_mut() {
        while t.value == 0.0 {
            t.value = rng.normal();
        }
    }
    let mut a = TripletMatrix::new(m, n, entries);
    a.canonicalize();

    let cones = spec.cone_kind.cone_spec(n);
    let view = ConeWorkview::new(&cones);
    let f = build_uv(&a);

    let x_dot = rng.normals(n);
    let x_hat = project_product(&view, &x_dot).expect("length n");
    let b = f
        .apply_u(&f.apply_vt(&x_hat).expect("length n"))
        .expect("length o");

    let (c, dual_witness) = if spec.bounded_mode {
        let lam = rng.normals(m);
        let s_raw = rng.normals(n);
        let s = project_product(&view, &s_raw).expect("length n");
        let atl = f
            .apply_v(&f.apply_ut(&lam).expect("length m"))
            .expect("length o");
        let c: Vec<f64> = atl.iter().zip(&s).map(|(&g, &sj)| -g + sj).collect();
        (c, Some((lam, s)))
    } else {
        (rng.normals(n), None)
    };

    Ok(GeneratedInstance {
        problem: ProblemInstance::new(a, b, c, cones),
        primal_witness: x_hat,
        dual_witness,
    })
}
