//! Matrix-free first-order solver for sparse conic programs
//!
//! ```text
//! minimize cᵀx   subject to   Ax = b,   x ∈ K = K_{n₁} × … × K_{n_κ}
//! ```
//!
//! where each `K_q` is a Lorentz cone (`q = 1` is the half-line). The
//! constraint matrix is split as `A = U·Vᵀ` with one nonzero per column of
//! each factor, which makes both `I + UUᵀ` and `I + VVᵀ` diagonal. ADMM on
//! the lifted problem then only needs gathers, scatter-adds, diagonal
//! scalings and cone projections.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the common double-precision instantiations.

pub mod admm;
pub mod cli;
pub mod cones;
pub mod gen;
pub mod io;
pub mod model;
pub mod oracle;
pub mod scalar;
pub mod uv;

pub use admm::{
    check_termination, compute_report, dual_update, iterate, residuals, solve, x_update, y_update,
    z_update, ConfigError, IterationReport, Residuals, SolveError, SolveResult, Solver,
    SolverConfig, SolverState, Status, TermMode, Workspace,
};
pub use cli::run_cli;
pub use cones::{in_cone, project_block, project_product, ConeWorkview};
pub use gen::{generate, ConeKind, GenError, GenSpec, GeneratedInstance};
pub use io::{parse_problem, parse_solution, write_problem, ParseError, Solution};
pub use model::{validate, ConeSpec, ProblemInstance, Triplet, TripletMatrix, ValidationReport};
pub use oracle::{dense_assemble, dense_iterate, dense_run, DenseMatrix, DenseMirror, OracleError};
pub use scalar::Scalar;
pub use uv::{build_uv, DimensionMismatch, UvFactors};

pub type Problem = ProblemInstance<f64>;
pub type Problem32 = ProblemInstance<f32>;
pub type Matrix = TripletMatrix<f64>;
pub type Factors = UvFactors<f64>;
pub type Factors32 = UvFactors<f32>;
pub type Config = SolverConfig<f64>;
pub type Config32 = SolverConfig<f32>;
pub type State = SolverState<f64>;
pub type Report = IterationReport<f64>;
