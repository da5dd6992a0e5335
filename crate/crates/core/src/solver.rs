//! Residual and Jacobian assembly, safeguarded Newton, homotopy continuation
//! along `φ_t`, and the ε-regularized path for the homogeneous case.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lambda_op::OperatorMode;
use crate::problem::{ExponentCase, ProblemSpec};
use crate::sphere::{spectrum_field, FrameEigen, SolutionField, SphereGrid, G1, G2, H11, H12, H22};

/// How the equation `F = RHS` is turned into a residual. All forms share
/// their zero set; they differ in scaling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualForm {
    /// `F − RHS`
    Raw,
    /// `F^{1/(k−l)} − RHS^{1/(k−l)}`, whose linearization is `L_u`.
    Normalized,
    /// `log F − log RHS`; invariant under rescaling of `φ`, used by Newton.
    Log,
}

impl ResidualForm {
    /// Transformed value and its derivative at `x > 0`.
    fn apply(self, x: f64, order: f64) -> (f64, f64) {
        match self {
            ResidualForm::Raw => (x, 1.0),
            ResidualForm::Normalized => {
                let v = x.powf(1.0 / order);
                (v, v / (order * x))
            }
            ResidualForm::Log => (x.ln(), 1.0 / x),
        }
    }
}

/// A problem instance: exponents, grid and per-node `φ`.
#[derive(Debug, Clone)]
pub struct Problem {
    spec: ProblemSpec,
    grid: SphereGrid,
    phi: Vec<f64>,
}

impl Problem {
    pub fn new(spec: ProblemSpec, grid: SphereGrid, phi: Vec<f64>) -> Result<Self> {
        if grid.dim() != spec.n() {
            return Err(Error::DimensionMismatch {
                expected: spec.n(),
                got: grid.dim(),
            });
        }
        if phi.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: phi.len(),
            });
        }
        if let Some(node) = phi.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::NonPositive {
                node,
                value: phi[node],
            });
        }
        Ok(Problem { spec, grid, phi })
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn grid(&self) -> &SphereGrid {
        &self.grid
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    /// Same grid and `φ` with `p` replaced by `p + ε`.
    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        Ok(Problem {
            spec: self.spec.with_eps(eps)?,
            grid: self.grid.clone(),
            phi: self.phi.clone(),
        })
    }

    /// `φ_t` at every node.
    pub fn phi_t(&self, t: f64) -> Vec<f64> {
        self.phi.iter().map(|&f| self.spec.phi_t(f, t)).collect()
    }

    pub fn field(&self, u: &[f64]) -> Result<SolutionField> {
        spectrum_field(u, &self.grid, self.spec.op())
    }
}

/// Sparse square operator stored by rows.
#[derive(Debug, Clone)]
pub struct LinearOperator {
    rows: Vec<Vec<(usize, f64)>>,
}

impl LinearOperator {
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|(j, w)| w * v[*j]).sum())
            .collect()
    }

    /// Solve `self · x = b` by sparse LU with partial pivoting.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        use faer::linalg::solvers::Solve;
        use faer::sparse::{SparseColMat, Triplet};

        let n = self.dim();
        let triplets: Vec<Triplet<usize, usize, f64>> = self
            .rows
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().map(move |&(j, w)| Triplet::new(i, j, w)))
            .collect();
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
            .map_err(|e| Error::LinearSolve(format!("{e:?}")))?;
        let lu = mat
            .sp_lu()
            .map_err(|e| Error::LinearSolve(format!("{e:?}")))?;
        let mut x = faer::Mat::<f64>::from_fn(n, 1, |i, _| b[i]);
        lu.solve_in_place(x.as_mut());
        let out: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::LinearSolve(
                "singular or ill-conditioned Jacobian".into(),
            ));
        }
        Ok(out)
    }
}

struct NodeOut {
    value: f64,
    row: Option<Vec<(usize, f64)>>,
}

/// Residual of one node and, optionally, its Jacobian row.
fn node_eval(
    problem: &Problem,
    u: &[f64],
    node: usize,
    phi_t: f64,
    form: ResidualForm,
    with_row: bool,
) -> Result<NodeOut> {
    let spec = problem.spec();
    let op = spec.op();
    let grid = problem.grid();
    let ui = u[node];
    if !(ui > 0.0) {
        return Err(Error::NonPositive { node, value: ui });
    }
    let d = grid.derivs_at(u, node);
    let eig = FrameEigen::from_derivs(op.n(), ui, &d);
    let margin = op.margin(&eig.values)?;
    if !(margin > 0.0) {
        return Err(Error::InadmissibleNode { node, margin });
    }
    let f = op.value(&eig.values, OperatorMode::Raw)?;
    let g2 = d.grad_sq();
    let rhs = spec.rhs(ui, g2, phi_t);
    let order = op.order();
    let (fv, df) = form.apply(f, order);
    let (rv, dr) = form.apply(rhs, order);
    let value = fv - rv;
    if !with_row {
        return Ok(NodeOut { value, row: None });
    }
    let grad = op.grad_lambda(&eig.values, OperatorMode::Raw)?;
    let (dh, trace) = eig.chain(&grad);
    let (dlog_u, dlog_g2) = spec.rhs_log_derivs(ui, g2);
    let drhs = dr * rhs;
    let coeff = [
        -drhs * dlog_g2 * 2.0 * d.g[0],
        -drhs * dlog_g2 * 2.0 * d.g[1],
        df * dh[0],
        df * dh[1],
        df * dh[2],
    ];
    let mut row: Vec<(usize, f64)> = grid
        .stencil(node)
        .iter()
        .map(|(j, w)| {
            let v = w[G1] * coeff[G1]
                + w[G2] * coeff[G2]
                + w[H11] * coeff[H11]
                + w[H12] * coeff[H12]
                + w[H22] * coeff[H22];
            (*j, v)
        })
        .collect();
    let diag = df * trace - drhs * dlog_u;
    match row.iter_mut().find(|(j, _)| *j == node) {
        Some(e) => e.1 += diag,
        None => row.push((node, diag)),
    }
    Ok(NodeOut {
        value,
        row: Some(row),
    })
}

fn assemble(
    problem: &Problem,
    u: &[f64],
    t: f64,
    form: ResidualForm,
    with_rows: bool,
) -> Result<(Vec<f64>, Option<LinearOperator>)> {
    let grid = problem.grid();
    if u.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            got: u.len(),
        });
    }
    let phi_t = problem.phi_t(t);
    let outs: Vec<Result<NodeOut>> = (0..grid.len())
        .into_par_iter()
        .map(|i| node_eval(problem, u, i, phi_t[i], form, with_rows))
        .collect();
    let mut values = Vec::with_capacity(outs.len());
    let mut rows = Vec::with_capacity(if with_rows { outs.len() } else { 0 });
    for out in outs {
        let out = out?;
        values.push(out.value);
        if let Some(r) = out.row {
            rows.push(r);
        }
    }
    Ok((values, with_rows.then_some(LinearOperator { rows })))
}

/// Per-node residual of `F(u) = RHS_t(u)` in the chosen form. Fails on the
/// first node (by index) that is nonpositive or outside the cone.
pub fn residual(u: &[f64], problem: &Problem, t: f64, form: ResidualForm) -> Result<Vec<f64>> {
    Ok(assemble(problem, u, t, form, false)?.0)
}

/// Exact Jacobian of [`residual`] at `u`. For [`ResidualForm::Normalized`]
/// this is `L_u(v) = F̃^{ij}(v_ij + vδ_ij) − ∂_u(RHS̃)v − ∂_{∇u}(RHS̃)·∇v`.
pub fn linearize(
    u: &[f64],
    problem: &Problem,
    t: f64,
    form: ResidualForm,
) -> Result<LinearOperator> {
    Ok(assemble(problem, u, t, form, true)?
        .1
        .expect("rows requested"))
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, b| a.max(b.abs()))
}

#[derive(Debug, Clone, Serialize)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iters: usize,
    pub max_halvings: usize,
    pub form: ResidualForm,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-10,
            max_iters: 50,
            max_halvings: 40,
            form: ResidualForm::Log,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual_inf: f64,
}

/// Nonlinear system over an unknown vector; `eval` fails on inadmissible
/// states.
trait System {
    fn eval(&self, x: &[f64], with_jac: bool) -> Result<(Vec<f64>, Option<LinearOperator>)>;
}

struct Plain<'a> {
    problem: &'a Problem,
    t: f64,
    form: ResidualForm,
}

impl System for Plain<'_> {
    fn eval(&self, x: &[f64], with_jac: bool) -> Result<(Vec<f64>, Option<LinearOperator>)> {
        assemble(self.problem, x, self.t, self.form, with_jac)
    }
}

/// Unknowns `(ũ, s)` with `log F(ũ) − log RHS(ũ) − s = 0` and `ũ_ref = 1`,
/// i.e. `F(ũ) = e^s·RHS(ũ)` with the dilation freedom pinned.
struct Gauged<'a> {
    problem: &'a Problem,
    t: f64,
    reference: usize,
}

impl System for Gauged<'_> {
    fn eval(&self, x: &[f64], with_jac: bool) -> Result<(Vec<f64>, Option<LinearOperator>)> {
        let n = x.len() - 1;
        let s = x[n];
        let (mut r, jac) = assemble(self.problem, &x[..n], self.t, ResidualForm::Log, with_jac)?;
        r.iter_mut().for_each(|v| *v -= s);
        r.push(x[self.reference] - 1.0);
        let jac = jac.map(|mut j| {
            for row in &mut j.rows {
                row.push((n, -1.0));
            }
            j.rows.push(vec![(self.reference, 1.0)]);
            j
        });
        Ok((r, jac))
    }
}

fn newton<S: System>(system: &S, x0: &[f64], opts: &NewtonOptions) -> Result<NewtonOutcome> {
    let (mut r, _) = system.eval(x0, false).map_err(|e| match e {
        Error::NonPositive { .. } | Error::InadmissibleNode { .. } => {
            Error::Precondition(format!("initial iterate is not admissible: {e}"))
        }
        other => other,
    })?;
    let mut x = x0.to_vec();
    let mut norm = inf_norm(&r);
    if !norm.is_finite() {
        return Err(Error::Precondition("initial residual is not finite".into()));
    }
    for iter in 0..opts.max_iters {
        if norm <= opts.tol {
            return Ok(NewtonOutcome {
                x,
                iterations: iter,
                residual_inf: norm,
            });
        }
        let (_, jac) = system.eval(&x, true)?;
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let step = jac.expect("jacobian requested").solve(&rhs)?;
        let mut accepted = None;
        for halving in 0..=opts.max_halvings {
            let alpha = 0.5f64.powi(halving as i32);
            let trial: Vec<f64> = x.iter().zip(&step).map(|(a, d)| a + alpha * d).collect();
            let Ok((r_new, _)) = system.eval(&trial, false) else {
                continue;
            };
            let new_norm = inf_norm(&r_new);
            if new_norm.is_finite()
                && (new_norm <= (1.0 - alpha / 4.0) * norm || new_norm <= opts.tol)
            {
                accepted = Some((trial, r_new, new_norm));
                break;
            }
        }
        match accepted {
            Some((xn, rn, nn)) => {
                x = xn;
                r = rn;
                norm = nn;
            }
            None => {
                return Err(Error::LineSearchExhausted {
                    iter,
                    halvings: opts.max_halvings,
                    residual: norm,
                })
            }
        }
    }
    if norm <= opts.tol {
        return Ok(NewtonOutcome {
            x,
            iterations: opts.max_iters,
            residual_inf: norm,
        });
    }
    Err(Error::NewtonMaxIterations {
        iters: opts.max_iters,
        residual: norm,
    })
}

/// Damped Newton for `F(u) = RHS_t(u)`. Every accepted iterate is positive
/// and admissible, and the residual decreases by `1 − α/4` per step.
pub fn newton_solve(
    u0: &[f64],
    problem: &Problem,
    t: f64,
    opts: &NewtonOptions,
) -> Result<NewtonOutcome> {
    newton(
        &Plain {
            problem,
            t,
            form: opts.form,
        },
        u0,
        opts,
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuationOptions {
    /// Number of uniform steps on `[0, 1]` before any halving.
    pub steps: usize,
    pub min_step: f64,
    pub newton: NewtonOptions,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions {
            steps: 10,
            min_step: 1e-4,
            newton: NewtonOptions::default(),
        }
    }
}

/// One accepted point of the homotopy path.
#[derive(Debug, Clone)]
pub struct HomotopyState {
    pub t: f64,
    pub field: SolutionField,
    pub newton_iters: usize,
    pub res_inf: f64,
    pub min_margin: f64,
    pub min_eig_a: f64,
}

/// Adaptive march over `t ∈ [0, 1]` with a secant predictor. `solve(t, guess)`
/// corrects a guess; `accept` records a converged state.
fn march(
    opts: &ContinuationOptions,
    x0: Vec<f64>,
    mut solve: impl FnMut(f64, &[f64]) -> Result<NewtonOutcome>,
    mut accept: impl FnMut(f64, &NewtonOutcome) -> Result<()>,
) -> Result<Vec<f64>> {
    if opts.steps == 0 {
        return Err(Error::InvalidParameter(
            "continuation needs at least one step".into(),
        ));
    }
    let base = 1.0 / opts.steps as f64;
    let mut dt = base;
    let mut t = 0.0;
    let mut x = x0;
    let mut prev: Option<(f64, Vec<f64>)> = None;
    while t < 1.0 {
        let t_next = if 1.0 - t <= dt * (1.0 + 1e-9) {
            1.0
        } else {
            t + dt
        };
        let h = t_next - t;
        let guess: Vec<f64> = match &prev {
            Some((tp, xp)) => {
                let ratio = h / (t - tp);
                x.iter().zip(xp).map(|(a, b)| a + ratio * (a - b)).collect()
            }
            None => x.clone(),
        };
        let attempt = solve(t_next, &guess).or_else(|_| solve(t_next, &x));
        match attempt {
            Ok(out) => {
                accept(t_next, &out)?;
                prev = Some((t, std::mem::replace(&mut x, out.x)));
                t = t_next;
                dt = (2.0 * dt).min(base);
            }
            Err(_) => {
                dt *= 0.5;
                if dt < opts.min_step {
                    return Err(Error::StepUnderflow {
                        last_good_t: t,
                        min_step: opts.min_step,
                    });
                }
            }
        }
    }
    Ok(x)
}

fn state(problem: &Problem, t: f64, out: &NewtonOutcome) -> Result<HomotopyState> {
    let mut field = problem.field(&out.x)?;
    field.set_residual(residual(&out.x, problem, t, ResidualForm::Raw)?);
    Ok(HomotopyState {
        t,
        newton_iters: out.iterations,
        res_inf: out.residual_inf,
        min_margin: field.min_margin(),
        min_eig_a: field.min_eig(),
        field,
    })
}

fn require_nonhomogeneous(problem: &Problem) -> Result<()> {
    if problem.spec().case() != ExponentCase::Nonhomogeneous {
        return Err(Error::Precondition(
            "continuation needs p > q − l; use homogeneous_solve when p = q − l".into(),
        ));
    }
    Ok(())
}

/// Continuation from `u ≡ 1` at `t = 0` to the target `φ` at `t = 1`.
pub fn continuation(problem: &Problem, opts: &ContinuationOptions) -> Result<Vec<HomotopyState>> {
    continuation_from(problem, &vec![1.0; problem.grid().len()], opts)
}

/// Continuation starting from an arbitrary admissible `u0`, which is first
/// corrected onto the `t = 0` solution.
pub fn continuation_from(
    problem: &Problem,
    u0: &[f64],
    opts: &ContinuationOptions,
) -> Result<Vec<HomotopyState>> {
    require_nonhomogeneous(problem)?;
    let start = newton_solve(u0, problem, 0.0, &opts.newton)?;
    let mut states = vec![state(problem, 0.0, &start)?];
    march(
        opts,
        start.x,
        |t, guess| newton_solve(guess, problem, t, &opts.newton),
        |t, out| {
            states.push(state(problem, t, out)?);
            Ok(())
        },
    )?;
    Ok(states)
}

#[derive(Debug, Clone, Serialize)]
pub struct HomogeneousOptions {
    /// Strictly decreasing positive regularization parameters.
    pub eps_list: Vec<f64>,
    pub cauchy_tol: f64,
    pub continuation: ContinuationOptions,
}

impl Default for HomogeneousOptions {
    fn default() -> Self {
        HomogeneousOptions {
            eps_list: vec![0.5, 0.25, 0.1, 0.05, 0.02],
            cauchy_tol: 1e-4,
            continuation: ContinuationOptions::default(),
        }
    }
}

/// Result of one regularized solve.
#[derive(Debug, Clone, Serialize)]
pub struct EpsRecord {
    pub eps: f64,
    /// `γ_ε = (min u_ε)^ε`.
    pub gamma: f64,
    /// `log min u_ε`, finite even when `min u_ε` itself would overflow.
    pub log_min_u: f64,
    pub steps: usize,
}

#[derive(Debug, Clone)]
pub struct HomogeneousOutcome {
    /// `ũ = u_ε/min u_ε` for the smallest `ε`.
    pub field: SolutionField,
    /// `γ_ε` for the smallest `ε`.
    pub gamma: f64,
    /// `γ` from the gauge-fixed solve of the unregularized equation.
    pub gamma_limit: f64,
    /// Normalized solution of the unregularized equation.
    pub limit_field: SolutionField,
    pub records: Vec<EpsRecord>,
}

fn argmin(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

/// Gauge-fixed Newton for `F(ũ) = γ·RHS(ũ)` with `ũ = 1` at `reference`,
/// over the unknowns `(ũ, log γ)`.
fn gauged_solve(
    problem: &Problem,
    t: f64,
    reference: usize,
    guess: &[f64],
    opts: &NewtonOptions,
) -> Result<NewtonOutcome> {
    newton(
        &Gauged {
            problem,
            t,
            reference,
        },
        guess,
        opts,
    )
}

/// Move the pin to the current minimum node. Rescaling `ũ → ũ/c` maps
/// `F(ũ) = e^s·RHS(ũ)` to the same equation with `s + (p − q + l)·log c`.
fn repin(problem: &Problem, x: &[f64]) -> (usize, Vec<f64>) {
    let nodes = x.len() - 1;
    let reference = argmin(&x[..nodes]);
    let scale = x[reference];
    let mut g = x.to_vec();
    g[..nodes].iter_mut().for_each(|v| *v /= scale);
    g[nodes] += problem.spec().gap() * scale.ln();
    (reference, g)
}

/// `u_ε = γ^{1/ε}ũ`, so `log min u_ε = (log γ)/ε + log min ũ`.
fn normalized(problem: &Problem, x: &[f64]) -> Result<(SolutionField, f64)> {
    let n = x.len() - 1;
    let min = x[..n].iter().copied().fold(f64::INFINITY, f64::min);
    let u: Vec<f64> = x[..n].iter().map(|v| v / min).collect();
    let mut field = problem.field(&u)?;
    field.set_residual(residual(&u, problem, 1.0, ResidualForm::Log)?);
    Ok((field, min))
}

/// Solve the homogeneous case `p = q − l > 1` through the regularized
/// equations with `p + ε`, normalizing each solution by its minimum and
/// recording `γ_ε = (min u_ε)^ε`.
///
/// Each regularized equation is solved by continuation in the gauge-fixed
/// variables `(ũ, log γ)`, which stay `O(1)` even when `u_ε` itself is
/// exponentially large or small in `1/ε`.
pub fn homogeneous_solve(
    problem: &Problem,
    opts: &HomogeneousOptions,
) -> Result<HomogeneousOutcome> {
    let spec = problem.spec();
    if spec.case() != ExponentCase::Homogeneous {
        return Err(Error::Precondition(
            "homogeneous_solve needs p = q − l; use continuation when p > q − l".into(),
        ));
    }
    if !(spec.p() > 1.0) {
        return Err(Error::Precondition(format!(
            "the homogeneous case needs p = q − l > 1, got p = {}",
            spec.p()
        )));
    }
    let eps = &opts.eps_list;
    if eps.is_empty() || eps.iter().any(|e| !(*e > 0.0)) || eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Precondition(format!(
            "eps_list must be positive and strictly decreasing, got {eps:?}"
        )));
    }
    let nodes = problem.grid().len();
    let newton_opts = &opts.continuation.newton;
    let mut records = Vec::with_capacity(eps.len());
    let mut last = None;
    for &e in eps {
        let pe = problem.with_eps(e)?;
        let mut x0 = vec![1.0; nodes + 1];
        x0[nodes] = 0.0;
        let mut steps = 0;
        let x = march(
            &opts.continuation,
            x0,
            |t, guess| {
                let (reference, g) = repin(&pe, guess);
                gauged_solve(&pe, t, reference, &g, newton_opts)
            },
            |_, _| {
                steps += 1;
                Ok(())
            },
        )?;
        let (field, min) = normalized(&pe, &x)?;
        let log_min_u = x[nodes] / e + min.ln();
        records.push(EpsRecord {
            eps: e,
            gamma: (e * log_min_u).exp(),
            log_min_u,
            steps,
        });
        last = Some((field, x));
    }
    let (field, x_last) = last.expect("eps_list is nonempty");
    let gamma = records.last().expect("nonempty").gamma;

    let (reference, g) = repin(problem, &x_last);
    let limit = gauged_solve(problem, 1.0, reference, &g, newton_opts)?;
    let (limit_field, _) = normalized(problem, &limit.x)?;
    // without regularization γ is invariant under the dilation ũ → ũ/c
    let gamma_limit = limit.x[nodes].exp();

    let tail: Vec<f64> = records.iter().rev().take(3).map(|r| r.gamma).collect();
    let spread = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - tail.iter().copied().fold(f64::INFINITY, f64::min);
    if spread > opts.cauchy_tol {
        return Err(Error::NotCauchy {
            sequence: records.iter().map(|r| r.gamma).collect(),
            tol: opts.cauchy_tol,
        });
    }
    Ok(HomogeneousOutcome {
        field,
        gamma,
        gamma_limit,
        limit_field,
        records,
    })
}
