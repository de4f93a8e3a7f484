//! Fixed-penalty ADMM over the splitting
//!
//! ```text
//! minimize cᵀx  s.t.  U·y = b  (λ),  y = Vᵀx  (γ),  z = x  (δ),  z ∈ K
//! ```
//!
//! with blocks `{x}`, `{y, z}` and multipliers `{λ, γ, δ}`. Every update is
//! closed form: diagonal scalings, gathers, scatter-adds and a cone
//! projection. One iteration costs `O(o + m + n)` and allocates nothing.

use std::fmt;

use thiserror::Error;

use crate::cones::{project_in_place_unchecked, ConeWorkview};
use crate::model::{validate, ProblemInstance, ValidationReport};
use crate::scalar::{all_finite, dot, norm_2, norm_inf, Scalar};
use crate::uv::{build_uv, UvFactors};

/// Which stopping rule [`check_termination`] applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TermMode {
    /// Infinity-norm residuals against `ε_abs + ε_rel·scale`, strict `<`.
    Osqp,
    /// 2-norm residuals and duality gap relative to `1 + ‖·‖`, inclusive `≤`.
    Scs,
    /// 2-norm primal residual and gap below caller-supplied targets.
    Target,
}

impl TermMode {
    pub fn as_str(self) -> &'static str {
        match self {
            TermMode::Osqp => "osqp",
            TermMode::Scs => "scs",
            TermMode::Target => "target",
        }
    }
}

impl fmt::Display for TermMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for TermMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "osqp" => Ok(TermMode::Osqp),
            "scs" => Ok(TermMode::Scs),
            "target" => Ok(TermMode::Target),
            other => Err(format!("unknown termination mode '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig<T> {
    /// Penalty parameter, fixed for the whole run.
    pub mu: T,
    pub max_iters: usize,
    /// Residuals are evaluated every `check_every` iterations (and at `max_iters`).
    pub check_every: usize,
    pub term_mode: TermMode,
    pub eps_abs: T,
    pub eps_rel: T,
    pub eps_prim: T,
    pub eps_dual: T,
    pub eps_gap: T,
    pub target_prim_res: Option<T>,
    pub target_gap: Option<T>,
}

impl<T: Scalar> Default for SolverConfig<T> {
    fn default() -> Self {
        SolverConfig {
            mu: T::one(),
            max_iters: 100_000,
            check_every: 25,
            term_mode: TermMode::Scs,
            eps_abs: T::lit(1e-4),
            eps_rel: T::lit(1e-3),
            eps_prim: T::lit(1e-3),
            eps_dual: T::lit(1e-3),
            eps_gap: T::lit(1e-3),
            target_prim_res: None,
            target_gap: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("mu must be positive and finite")]
    NonPositiveMu,
    #[error("max_iters must be at least 1")]
    ZeroMaxIters,
    #[error("check_every must be at least 1")]
    ZeroCheckEvery,
    #[error("tolerance {0} must be finite and non-negative")]
    BadTolerance(&'static str),
    #[error("target mode requires both target_prim_res and target_gap")]
    MissingTargets,
}

impl<T: Scalar> SolverConfig<T> {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.mu > T::zero() && self.mu.is_finite()) {
            return Err(ConfigError::NonPositiveMu);
        }
        if self.max_iters == 0 {
            return Err(ConfigError::ZeroMaxIters);
        }
        if self.check_every == 0 {
            return Err(ConfigError::ZeroCheckEvery);
        }
        let tols = [
            ("eps_abs", Some(self.eps_abs)),
            ("eps_rel", Some(self.eps_rel)),
            ("eps_prim", Some(self.eps_prim)),
            ("eps_dual", Some(self.eps_dual)),
            ("eps_gap", Some(self.eps_gap)),
            ("target_prim_res", self.target_prim_res),
            ("target_gap", self.target_gap),
        ];
        for (name, v) in tols {
            if let Some(v) = v {
                if !(v >= T::zero() && v.is_finite()) {
                    return Err(ConfigError::BadTolerance(name));
                }
            }
        }
        if self.term_mode == TermMode::Target
            && (self.target_prim_res.is_none() || self.target_gap.is_none())
        {
            return Err(ConfigError::MissingTargets);
        }
        Ok(())
    }

    /// Sets `eps_prim`, `eps_dual` and `eps_gap` together.
    pub fn with_eps(mut self, eps: T) -> Self {
        self.eps_prim = eps;
        self.eps_dual = eps;
        self.eps_gap = eps;
        self
    }
}

/// Primal iterates, multipliers and the iteration counter.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState<T> {
    pub x: Vec<T>,
    pub y: Vec<T>,
    pub z: Vec<T>,
    pub lambda: Vec<T>,
    pub gamma: Vec<T>,
    pub delta: Vec<T>,
    pub iter: usize,
}

impl<T: Scalar> SolverState<T> {
    /// Cold start: every variable zero.
    pub fn zeros(m: usize, n: usize, o: usize) -> Self {
        SolverState {
            x: vec![T::zero(); n],
            y: vec![T::zero(); o],
            z: vec![T::zero(); n],
            lambda: vec![T::zero(); m],
            gamma: vec![T::zero(); o],
            delta: vec![T::zero(); n],
            iter: 0,
        }
    }

    pub fn for_factors(f: &UvFactors<T>) -> Self {
        Self::zeros(f.m(), f.n(), f.o())
    }

    pub fn matches(&self, f: &UvFactors<T>) -> bool {
        self.x.len() == f.n()
            && self.z.len() == f.n()
            && self.delta.len() == f.n()
            && self.y.len() == f.o()
            && self.gamma.len() == f.o()
            && self.lambda.len() == f.m()
    }

    pub fn is_finite(&self) -> bool {
        all_finite(&self.x)
            && all_finite(&self.y)
            && all_finite(&self.z)
            && all_finite(&self.lambda)
            && all_finite(&self.gamma)
            && all_finite(&self.delta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Running,
    Solved,
    MaxIters,
    Diverged,
}

impl Status {
    pub fn is_terminal(self) -> bool {
        self != Status::Running
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Running => "running",
            Status::Solved => "solved",
            Status::MaxIters => "max_iters",
            Status::Diverged => "diverged",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Status {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "running" => Ok(Status::Running),
            "solved" => Ok(Status::Solved),
            "max_iters" => Ok(Status::MaxIters),
            "diverged" => Ok(Status::Diverged),
            other => Err(format!("unknown status '{other}'")),
        }
    }
}

/// Optimality measures of a primal/dual pair `(x, λ)`.
///
/// The primal residual is `Ax − b`. The dual residual is the distance of
/// `Aᵀλ + c` from the cone: `(Aᵀλ + c) − proj_K(Aᵀλ + c)`, which vanishes
/// exactly when `Aᵀλ + c` is a valid cone multiplier. The gap is
/// `cᵀx + bᵀλ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals<T> {
    pub prim_res_inf: T,
    pub prim_res_2: T,
    pub dual_res_inf: T,
    pub dual_res_2: T,
    /// `‖Ax‖_∞`
    pub ax_inf: T,
    /// `‖Aᵀλ‖_∞`
    pub atl_inf: T,
    /// `cᵀx`
    pub pobj: T,
    /// `−bᵀλ`
    pub dobj: T,
    /// `cᵀx + bᵀλ`
    pub gap: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationReport<T> {
    pub iter: usize,
    pub prim_res_inf: T,
    pub dual_res_inf: T,
    pub prim_res_2: T,
    pub dual_res_2: T,
    /// `‖x − z‖_∞`
    pub cone_gap: T,
    pub pobj: T,
    pub dobj: T,
    pub gap: T,
    pub ax_inf: T,
    pub atl_inf: T,
    pub status: Status,
}

/// Scratch buffers so that iterations and reports do not allocate.
#[derive(Debug, Clone)]
pub struct Workspace<T> {
    tmp_o: Vec<T>,
    tmp_m: Vec<T>,
    tmp_n: Vec<T>,
    tmp_n2: Vec<T>,
}

impl<T: Scalar> Workspace<T> {
    pub fn new(f: &UvFactors<T>) -> Self {
        Workspace {
            tmp_o: vec![T::zero(); f.o()],
            tmp_m: vec![T::zero(); f.m()],
            tmp_n: vec![T::zero(); f.n()],
            tmp_n2: vec![T::zero(); f.n()],
        }
    }
}

/// Block 1: `x = F_V·(V(y + γ/μ) + z + δ/μ − c/μ)`.
pub fn x_update<T: Scalar>(
    f: &UvFactors<T>,
    state: &mut SolverState<T>,
    cfg: &SolverConfig<T>,
    c: &[T],
    ws: &mut Workspace<T>,
) {
    let mu = cfg.mu;
    for ((g, &y), &gm) in ws.tmp_o.iter_mut().zip(&state.y).zip(&state.gamma) {
        *g = y + gm / mu;
    }
    f.v_mul(&ws.tmp_o, &mut ws.tmp_n);
    for (j, x) in state.x.iter_mut().enumerate() {
        let rhs = ws.tmp_n[j] + state.z[j] + state.delta[j] / mu - c[j] / mu;
        *x = f.fv_diag()[j] * rhs;
    }
}

/// Block 2, y part: `y = (I − UᵀF_U U)·(Uᵀ(b − λ/μ) + Vᵀx − γ/μ)`.
/// Uses the `x` already updated in this iteration.
pub fn y_update<T: Scalar>(
    f: &UvFactors<T>,
    state: &mut SolverState<T>,
    cfg: &SolverConfig<T>,
    b: &[T],
    ws: &mut Workspace<T>,
) {
    let mu = cfg.mu;
    for ((w, &bi), &li) in ws.tmp_m.iter_mut().zip(b).zip(&state.lambda) {
        *w = bi - li / mu;
    }
    let (vals, rows, cols) = (f.values(), f.row_of(), f.col_of());
    for k in 0..ws.tmp_o.len() {
        ws.tmp_o[k] = vals[k] * ws.tmp_m[rows[k]] + state.x[cols[k]] - state.gamma[k] / mu;
    }
    f.y_factor(&ws.tmp_o, &mut state.y, &mut ws.tmp_m);
}

/// Block 2, z part: `z = proj_K(x − δ/μ)`.
pub fn z_update<T: Scalar>(view: &ConeWorkview, state: &mut SolverState<T>, cfg: &SolverConfig<T>) {
    let mu = cfg.mu;
    for ((z, &x), &d) in state.z.iter_mut().zip(&state.x).zip(&state.delta) {
        *z = x - d / mu;
    }
    project_in_place_unchecked(view, &mut state.z);
}

/// `λ += μ(Uy − b)`, `γ += μ(y − Vᵀx)`, `δ += μ(z − x)`.
pub fn dual_update<T: Scalar>(
    f: &UvFactors<T>,
    state: &mut SolverState<T>,
    cfg: &SolverConfig<T>,
    b: &[T],
    ws: &mut Workspace<T>,
) {
    let mu = cfg.mu;
    f.u_mul(&state.y, &mut ws.tmp_m);
    for ((l, &uy), &bi) in state.lambda.iter_mut().zip(&ws.tmp_m).zip(b) {
        *l = *l + mu * (uy - bi);
    }
    for ((g, &y), &j) in state.gamma.iter_mut().zip(&state.y).zip(f.col_of()) {
        *g = *g + mu * (y - state.x[j]);
    }
    for ((d, &z), &x) in state.delta.iter_mut().zip(&state.z).zip(&state.x) {
        *d = *d + mu * (z - x);
    }
}

/// One full iteration in Gauss–Seidel order: x, y, z, then the multipliers.
pub fn iterate<T: Scalar>(
    p: &ProblemInstance<T>,
    f: &UvFactors<T>,
    view: &ConeWorkview,
    state: &mut SolverState<T>,
    cfg: &SolverConfig<T>,
    ws: &mut Workspace<T>,
) {
    x_update(f, state, cfg, &p.c, ws);
    y_update(f, state, cfg, &p.b, ws);
    z_update(view, state, cfg);
    dual_update(f, state, cfg, &p.b, ws);
    state.iter += 1;
}

/// Residuals of `(x, λ)` computed matrix-free.
pub fn residuals<T: Scalar>(
    p: &ProblemInstance<T>,
    f: &UvFactors<T>,
    view: &ConeWorkview,
    x: &[T],
    lambda: &[T],
    ws: &mut Workspace<T>,
) -> Residuals<T> {
    f.a_mul(x, &mut ws.tmp_m);
    let ax_inf = norm_inf(&ws.tmp_m);
    for (r, &bi) in ws.tmp_m.iter_mut().zip(&p.b) {
        *r = *r - bi;
    }
    let prim_res_inf = norm_inf(&ws.tmp_m);
    let prim_res_2 = norm_2(&ws.tmp_m);

    f.at_mul(lambda, &mut ws.tmp_n);
    let atl_inf = norm_inf(&ws.tmp_n);
    for (r, &cj) in ws.tmp_n.iter_mut().zip(&p.c) {
        *r = *r + cj;
    }
    ws.tmp_n2.copy_from_slice(&ws.tmp_n);
    project_in_place_unchecked(view, &mut ws.tmp_n2);
    for (r, &pr) in ws.tmp_n.iter_mut().zip(&ws.tmp_n2) {
        *r = *r - pr;
    }
    let dual_res_inf = norm_inf(&ws.tmp_n);
    let dual_res_2 = norm_2(&ws.tmp_n);

    let pobj = dot(&p.c, x);
    let btl = dot(&p.b, lambda);
    Residuals {
        prim_res_inf,
        prim_res_2,
        dual_res_inf,
        dual_res_2,
        ax_inf,
        atl_inf,
        pobj,
        dobj: -btl,
        gap: pobj + btl,
    }
}

/// Evaluates the current state. Status is `Diverged` if any iterate is
/// non-finite, `Running` otherwise; termination is decided separately.
pub fn compute_report<T: Scalar>(
    p: &ProblemInstance<T>,
    f: &UvFactors<T>,
    view: &ConeWorkview,
    state: &SolverState<T>,
    ws: &mut Workspace<T>,
) -> IterationReport<T> {
    let r = residuals(p, f, view, &state.x, &state.lambda, ws);
    let cone_gap = state
        .x
        .iter()
        .zip(&state.z)
        .fold(T::zero(), |acc, (&x, &z)| acc.max((x - z).abs()));
    let status = if state.is_finite() {
        Status::Running
    } else {
        Status::Diverged
    };
    IterationReport {
        iter: state.iter,
        prim_res_inf: r.prim_res_inf,
        dual_res_inf: r.dual_res_inf,
        prim_res_2: r.prim_res_2,
        dual_res_2: r.dual_res_2,
        cone_gap,
        pobj: r.pobj,
        dobj: r.dobj,
        gap: r.gap,
        ax_inf: r.ax_inf,
        atl_inf: r.atl_inf,
        status,
    }
}

/// Applies the configured stopping rule. Terminal statuses are kept.
pub fn check_termination<T: Scalar>(
    report: &IterationReport<T>,
    cfg: &SolverConfig<T>,
    p: &ProblemInstance<T>,
) -> Status {
    if report.status.is_terminal() {
        return report.status;
    }
    let one = T::one();
    let solved = match cfg.term_mode {
        TermMode::Osqp => {
            let eps_prim = cfg.eps_abs + cfg.eps_rel * report.ax_inf.max(norm_inf(&p.b));
            let eps_dual = cfg.eps_abs + cfg.eps_rel * report.atl_inf.max(norm_inf(&p.c));
            report.prim_res_inf < eps_prim && report.dual_res_inf < eps_dual
        }
        TermMode::Scs => {
            let btl = -report.dobj;
            report.prim_res_2 <= cfg.eps_prim * (one + norm_2(&p.b))
                && report.dual_res_2 <= cfg.eps_dual * (one + norm_2(&p.c))
                && report.gap.abs() <= cfg.eps_gap * (one + report.pobj.abs() + btl.abs())
        }
        TermMode::Target => match (cfg.target_prim_res, cfg.target_gap) {
            (Some(tp), Some(tg)) => report.prim_res_2 < tp && report.gap.abs() < tg,
            _ => false,
        },
    };
    if solved {
        Status::Solved
    } else {
        Status::Running
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("invalid problem: {}", join_violations(.0))]
    InvalidProblem(ValidationReport),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(#[from] ConfigError),
    #[error("initial state dimensions do not match the problem")]
    StateDimension,
}

fn join_violations(r: &ValidationReport) -> String {
    r.violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Clone)]
pub struct SolveResult<T> {
    pub x: Vec<T>,
    pub lambda: Vec<T>,
    pub report: IterationReport<T>,
    /// Every evaluated report, in iteration order.
    pub trace: Vec<IterationReport<T>>,
    pub state: SolverState<T>,
}

impl<T: Scalar> SolveResult<T> {
    pub fn status(&self) -> Status {
        self.report.status
    }
}

/// Solver bound to one problem: factors, cone layout, state and scratch.
#[derive(Debug, Clone)]
pub struct Solver<'p, T> {
    problem: &'p ProblemInstance<T>,
    factors: UvFactors<T>,
    view: ConeWorkview,
    cfg: SolverConfig<T>,
    state: SolverState<T>,
    ws: Workspace<T>,
}

impl<'p, T: Scalar> Solver<'p, T> {
    pub fn new(problem: &'p ProblemInstance<T>, cfg: SolverConfig<T>) -> Result<Self, SolveError> {
        let report = validate(problem);
        if !report.is_ok() {
            return Err(SolveError::InvalidProblem(report));
        }
        cfg.validate()?;
        let factors = build_uv(&problem.a);
        let view = ConeWorkview::new(&problem.cones);
        let state = SolverState::for_factors(&factors);
        let ws = Workspace::new(&factors);
        Ok(Solver {
            problem,
            factors,
            view,
            cfg,
            state,
            ws,
        })
    }

    /// Replaces the current state (warm start).
    pub fn set_state(&mut self, state: SolverState<T>) -> Result<(), SolveError> {
        if !state.matches(&self.factors) {
            return Err(SolveError::StateDimension);
        }
        self.state = state;
        Ok(())
    }

    pub fn state(&self) -> &SolverState<T> {
        &self.state
    }

    pub fn factors(&self) -> &UvFactors<T> {
        &self.factors
    }

    pub fn view(&self) -> &ConeWorkview {
        &self.view
    }

    pub fn config(&self) -> &SolverConfig<T> {
        &self.cfg
    }

    /// One iteration. Does not allocate.
    pub fn step(&mut self) {
        iterate(
            self.problem,
            &self.factors,
            &self.view,
            &mut self.state,
            &self.cfg,
            &mut self.ws,
        );
    }

    /// Report for the current state with the stopping rule applied.
    pub fn report(&mut self) -> IterationReport<T> {
        let mut r = compute_report(
            self.problem,
            &self.factors,
            &self.view,
            &self.state,
            &mut self.ws,
        );
        r.status = check_termination(&r, &self.cfg, self.problem);
        r
    }

    /// Iterates until solved, diverged or `max_iters`.
    pub fn run(self) -> SolveResult<T> {
        self.run_with(|_| {})
    }

    /// Like [`Solver::run`], calling `on_report` after each evaluated report.
    pub fn run_with<F: FnMut(&IterationReport<T>)>(mut self, mut on_report: F) -> SolveResult<T> {
        let mut trace = Vec::new();
        let start = self.state.iter;
        let last = start + self.cfg.max_iters;
        let mut report = None;
        while self.state.iter < last {
            self.step();
            let it = self.state.iter;
            if (it - start).is_multiple_of(self.cfg.check_every) || it == last {
                let mut r = self.report();
                if r.status == Status::Running && it == last {
                    r.status = Status::MaxIters;
                }
                on_report(&r);
                trace.push(r);
                report = Some(r);
                if r.status.is_terminal() {
                    break;
                }
            }
        }
        let report = report.expect("max_iters >= 1 guarantees one report");
        SolveResult {
            x: self.state.x.clone(),
            lambda: self.state.lambda.clone(),
            report,
            trace,
            state: self.state,
        }
    }
}

/// Runs the solver from `init` (or all zeros).
pub fn solve<T: Scalar>(
    p: &ProblemInstance<T>,
    cfg: SolverConfig<T>,
    init: Option<SolverState<T>>,
) -> Result<SolveResult<T>, SolveError> {
    let mut solver = Solver::new(p, cfg)?;
    if let Some(s) = init {
        solver.set_state(s)?;
    }
    Ok(solver.run())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ConeSpec, TripletMatrix};

    fn one_by_one(b: f64, c: f64) -> ProblemInstance<f64> {
        ProblemInstance::new(
            TripletMatrix::from_tuples(1, 1, &[(0, 0, 1.0)]),
            vec![b],
            vec![c],
            ConeSpec::nonnegative(1),
        )
    }

    fn parts(p: &ProblemInstance<f64>) -> (UvFactors<f64>, ConeWorkview, Workspace<f64>) {
        let f = build_uv(&p.a);
        let view = ConeWorkview::new(&p.cones);
        let ws = Workspace::new(&f);
        (f, view, ws)
    }

    #[test]
    fn zero_state_is_fixed_by_x_update_with_zero_cost() {
        let p = one_by_one(0.0, 0.0);
        let (f, _, mut ws) = parts(&p);
        let mut s = SolverState::for_factors(&f);
        x_update(&f, &mut s, &SolverConfig::default(), &p.c, &mut ws);
        assert_eq!(s.x, vec![0.0]);
    }

    #[test]
    fn x_update_by_hand() {
        let p = one_by_one(0.0, 0.0);
        let (f, _, mut ws) = parts(&p);
        let mut s = SolverState::for_factors(&f);
        s.y = vec![2.0];
        x_update(&f, &mut s, &SolverConfig::default(), &p.c, &mut ws);
        assert_eq!(s.x, vec![1.0]);
    }

    #[test]
    fn y_update_by_hand() {
        let p = one_by_one(1.0, 0.0);
        let (f, _, mut ws) = parts(&p);
        let mut s = SolverState::for_factors(&f);
        y_update(&f, &mut s, &SolverConfig::default(), &p.b, &mut ws);
        assert_eq!(s.y, vec![0.5]);

        let p0 = one_by_one(0.0, 0.0);
        let mut s0 = SolverState::for_factors(&f);
        y_update(&f, &mut s0, &SolverConfig::default(), &p0.b, &mut ws);
        assert_eq!(s0.y, vec![0.0]);
    }

    #[test]
    fn z_update_projects() {
        let p = ProblemInstance::new(
            TripletMatrix::from_tuples(1, 4, &[(0, 0, 1.0)]),
            vec![0.0],
            vec![0.0; 4],
            ConeSpec::new(vec![4]),
        );
        let (f, view, _) = parts(&p);
        let mut s = SolverState::for_factors(&f);
        s.x = vec![3.0, 0.0, 0.0, 4.0];
        z_update(&view, &mut s, &SolverConfig::default());
        assert_eq!(s.z, vec![3.5, 0.0, 0.0, 3.5]);
        s.x = vec![5.0, 3.0, 0.0, 0.0];
        z_update(&view, &mut s, &SolverConfig::default());
        assert_eq!(s.z, s.x);

        let q = one_by_one(0.0, 0.0);
        let (fq, vq, _) = parts(&q);
        let mut sq = SolverState::for_factors(&fq);
        sq.x = vec![-3.0];
        z_update(&vq, &mut sq, &SolverConfig::default());
        assert_eq!(sq.z, vec![0.0]);
    }

    #[test]
    fn dual_update_by_hand() {
        let p = one_by_one(0.0, 0.0);
        let (f, _, mut ws) = parts(&p);
        let mut s = SolverState::for_factors(&f);
        s.y = vec![1.0];
        let cfg = SolverConfig {
            mu: 2.0,
            ..SolverConfig::default()
        };
        dual_update(&f, &mut s, &cfg, &p.b, &mut ws);
        assert_eq!(s.lambda, vec![2.0]);
    }

    #[test]
    fn dual_update_at_fixed_point_is_identity() {
        let p = one_by_one(2.0, 0.0);
        let (f, _, mut ws) = parts(&p);
        let mut s = SolverState::for_factors(&f);
        s.x = vec![2.0];
        s.y = vec![2.0];
        s.z = vec![2.0];
        s.lambda = vec![0.7];
        s.gamma = vec![-0.3];
        s.delta = vec![0.1];
        let before = s.clone();
        dual_update(&f, &mut s, &SolverConfig::default(), &p.b, &mut ws);
        assert_eq!(s, before);
    }

    #[test]
    fn report_of_exact_solution() {
        let p = one_by_one(1.0, 1.0);
        let (f, view, mut ws) = parts(&p);
        let mut s = SolverState::for_factors(&f);
        s.x = vec![1.0];
        s.z = vec![1.0];
        s.lambda = vec![-1.0];
        let r = compute_report(&p, &f, &view, &s, &mut ws);
        assert_eq!(r.prim_res_2, 0.0);
        assert_eq!(r.dual_res_2, 0.0);
        assert_eq!(r.gap, 0.0);
        assert_eq!(r.pobj, 1.0);
        assert_eq!(r.dobj, 1.0);
        for mode in [TermMode::Osqp, TermMode::Scs] {
            let cfg = SolverConfig {
                term_mode: mode,
                ..SolverConfig::default()
            };
            assert_eq!(check_termination(&r, &cfg, &p), Status::Solved);
        }
    }

    #[test]
    fn zero_state_residual_is_b() {
        let p = ProblemInstance::new(
            TripletMatrix::from_tuples(2, 1, &[(0, 0, 1.0), (1, 0, 2.0)]),
            vec![3.0, -5.0],
            vec![0.0],
            ConeSpec::nonnegative(1),
        );
        let (f, view, mut ws) = parts(&p);
        let s = SolverState::for_factors(&f);
        let r = compute_report(&p, &f, &view, &s, &mut ws);
        assert_eq!(r.prim_res_inf, 5.0);
        assert_eq!(r.status, Status::Running);
    }

    #[test]
    fn non_finite_state_diverges() {
        let p = one_by_one(1.0, 1.0);
        let (f, view, mut ws) = parts(&p);
        let mut s = SolverState::for_factors(&f);
        s.gamma = vec![f64::NAN];
        let r = compute_report(&p, &f, &view, &s, &mut ws);
        assert_eq!(r.status, Status::Diverged);
        assert_eq!(
            check_termination(&r, &SolverConfig::default(), &p),
            Status::Diverged
        );
    }

    fn report(
        prim_inf: f64,
        prim_2: f64,
        dual_inf: f64,
        dual_2: f64,
        gap: f64,
    ) -> IterationReport<f64> {
        IterationReport {
            iter: 1,
            prim_res_inf: prim_inf,
            dual_res_inf: dual_inf,
            prim_res_2: prim_2,
            dual_res_2: dual_2,
            cone_gap: 0.0,
            pobj: 0.0,
            dobj: 0.0,
            gap,
            ax_inf: 0.0,
            atl_inf: 0.0,
            status: Status::Running,
        }
    }

    #[test]
    fn scs_bounds_are_inclusive() {
        // ‖b‖₂ = 3, ‖c‖₂ = 0: bounds are 4e-3 and 1e-3; pobj = dobj = 0 gives 1e-3 for the gap.
        let p = ProblemInstance::new(
            TripletMatrix::from_tuples(1, 1, &[(0, 0, 1.0)]),
            vec![3.0],
            vec![0.0],
            ConeSpec::nonnegative(1),
        );
        let cfg = SolverConfig::default();
        let r = report(0.0, 1e-3 * 4.0, 0.0, 1e-3, 1e-3);
        assert_eq!(check_termination(&r, &cfg, &p), Status::Solved);
        let r = report(0.0, 1e-3 * 4.0, 0.0, 1e-3, 1.0001e-3);
        assert_eq!(check_termination(&r, &cfg, &p), Status::Running);
        let r = report(0.0, 0.0, 0.0, 0.0, -2e-3);
        assert_eq!(check_termination(&r, &cfg, &p), Status::Running);
    }

    #[test]
    fn osqp_bounds_are_strict() {
        // ‖b‖_∞ = 1 → ε_prim = 1e-4 + 1e-3.
        let p = one_by_one(1.0, 0.0);
        let cfg = SolverConfig {
            term_mode: TermMode::Osqp,
            ..SolverConfig::default()
        };
        let eps_prim = 1e-4 + 1e-3;
        assert_eq!(
            check_termination(&report(eps_prim, 0.0, 0.0, 0.0, 0.0), &cfg, &p),
            Status::Running
        );
        assert_eq!(
            check_termination(&report(eps_prim * 1.001, 0.0, 0.0, 0.0, 0.0), &cfg, &p),
            Status::Running
        );
        assert_eq!(
            check_termination(&report(eps_prim * 0.999, 0.0, 0.0, 0.0, 0.0), &cfg, &p),
            Status::Solved
        );
    }

    #[test]
    fn target_mode() {
        let p = one_by_one(1.0, 0.0);
        let cfg = SolverConfig {
            term_mode: TermMode::Target,
            target_prim_res: Some(1e-2),
            target_gap: Some(1e-3),
            ..SolverConfig::default()
        };
        assert_eq!(
            check_termination(&report(0.0, 5e-3, 9.0, 9.0, -5e-4), &cfg, &p),
            Status::Solved
        );
        assert_eq!(
            check_termination(&report(0.0, 5e-3, 0.0, 0.0, 1e-3), &cfg, &p),
            Status::Running
        );
        assert_eq!(
            check_termination(
                &report(0.0, 0.0, 0.0, 0.0, 0.0),
                &SolverConfig {
                    term_mode: TermMode::Target,
                    ..cfg.clone()
                },
                &p
            ),
            Status::Solved
        );
    }

    #[test]
    fn config_validation() {
        let ok = SolverConfig::<f64>::default();
        assert!(ok.validate().is_ok());
        let bad = |c: SolverConfig<f64>| c.validate().unwrap_err();
        assert_eq!(
            bad(SolverConfig {
                mu: 0.0,
                ..ok.clone()
            }),
            ConfigError::NonPositiveMu
        );
        assert_eq!(
            bad(SolverConfig {
                max_iters: 0,
                ..ok.clone()
            }),
            ConfigError::ZeroMaxIters
        );
        assert_eq!(
            bad(SolverConfig {
                check_every: 0,
                ..ok.clone()
            }),
            ConfigError::ZeroCheckEvery
        );
        assert_eq!(
            bad(SolverConfig {
                eps_gap: -1.0,
                ..ok.clone()
            }),
            ConfigError::BadTolerance("eps_gap")
        );
        assert_eq!(
            bad(SolverConfig {
                term_mode: TermMode::Target,
                ..ok.clone()
            }),
            ConfigError::MissingTargets
        );
    }

    #[test]
    fn solve_rejects_invalid_problem_and_state() {
        let mut p = one_by_one(1.0, 1.0);
        p.cones = ConeSpec::nonnegative(2);
        assert!(matches!(
            solve(&p, SolverConfig::default(), None),
            Err(SolveError::InvalidProblem(_))
        ));
        let p = one_by_one(1.0, 1.0);
        let bad = SolverState::zeros(2, 1, 1);
        assert!(matches!(
            solve(&p, SolverConfig::default(), Some(bad)),
            Err(SolveError::StateDimension)
        ));
    }

    #[test]
    fn trace_cadence_and_final_status() {
        let p = one_by_one(1.0, 1.0);
        let cfg = SolverConfig {
            max_iters: 60,
            check_every: 25,
            ..SolverConfig::default().with_eps(0.0)
        };
        let res = solve(&p, cfg, None).unwrap();
        let iters: Vec<_> = res.trace.iter().map(|r| r.iter).collect();
        // Exact zero residuals may still stop early; otherwise reports at 25, 50, 60.
        assert!(iters.starts_with(&[25]));
        assert!(res.trace[..res.trace.len() - 1]
            .iter()
            .all(|r| r.status == Status::Running));
        assert!(res.status().is_terminal());
    }

    #[test]
    fn one_by_one_lp_converges() {
        let p = one_by_one(1.0, 1.0);
        let res = solve(&p, SolverConfig::default().with_eps(1e-9), None).unwrap();
        assert_eq!(res.status(), Status::Solved);
        assert!((res.x[0] - 1.0).abs() < 1e-6);
        assert!((res.lambda[0] + 1.0).abs() < 1e-6);
    }

    #[test]
    fn f32_solve() {
        let p = one_by_one(1.0, 1.0).cast::<f32>();
        let res = solve(&p, SolverConfig::<f32>::default(), None).unwrap();
        assert_eq!(res.status(), Status::Solved);
        assert!((res.x[0] - 1.0).abs() < 1e-2);
    }
}
