//! C ABI for `dualcm`.
//!
//! Every function returns a [`DcmStatus`]. On failure a message is available
//! from [`dcm_last_error_message`] on the calling thread. Problems and
//! solutions are opaque handles released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dualcm::diagnostics::check_phi;
use dualcm::lambda_op::in_pk_cone;
use dualcm::problem::ProblemSpec;
use dualcm::solver::{
    continuation, homogeneous_solve, ContinuationOptions, HomogeneousOptions, Problem,
};
use dualcm::sphere::{Backend, SolutionField, SphereGrid};
use dualcm::symfunc::{quotient, sigma};
use dualcm::Error;

/// Result of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DcmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Input outside the domain of the operation, such as a nonpositive `φ`.
    Domain = 3,
    ConeViolation = 4,
    SolverFailure = 5,
    Io = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DcmBackend {
    Axisym = 0,
    FullS2 = 1,
}

/// Problem data: exponents, grid and `φ`.
pub struct DcmProblem {
    spec: ProblemSpec,
    grid: SphereGrid,
    phi: Option<Vec<f64>>,
}

/// Terminal solution of a solve.
pub struct DcmSolution {
    field: SolutionField,
    /// `NaN` unless produced by [`dcm_homogeneous_solve`].
    gamma: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(DcmStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::ConeViolation { .. } | Error::InadmissibleNode { .. } => {
                DcmStatus::ConeViolation
            }
            Error::NonPositive { .. } | Error::Precondition(_) => DcmStatus::Domain,
            Error::LineSearchExhausted { .. }
            | Error::NewtonMaxIterations { .. }
            | Error::LinearSolve(_)
            | Error::StepUnderflow { .. }
            | Error::NotCauchy { .. } => DcmStatus::SolverFailure,
            Error::Io { .. } | Error::Csv(_) | Error::Json(_) => DcmStatus::Io,
            _ => DcmStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(DcmStatus::NullPointer, format!("`{what}` is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(DcmStatus::InvalidArgument, msg.into())
}

/// Run `f`, translating errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DcmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            DcmStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {msg}"));
            DcmStatus::Panic
        }
    }
}

unsafe fn slice<'a>(data: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

unsafe fn slice_mut<'a>(data: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if data.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(data, len))
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn dcm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// `σ_k(λ)` of `len` values.
///
/// # Safety
/// `lam` must point to `len` readable doubles and `out` to a writable double.
#[no_mangle]
pub unsafe extern "C" fn dcm_sigma(
    k: i64,
    lam: *const f64,
    len: usize,
    out: *mut f64,
) -> DcmStatus {
    guard(|| {
        let lam = slice(lam, len, "lam")?;
        let k = isize::try_from(k).map_err(|_| invalid("k out of range"))?;
        write(out, sigma(k, lam), "out")
    })
}

/// `σ_k(λ)/σ_l(λ)` on `Γ_k`.
///
/// # Safety
/// `lam` must point to `len` readable doubles and `out` to a writable double.
#[no_mangle]
pub unsafe extern "C" fn dcm_quotient(
    k: usize,
    l: usize,
    lam: *const f64,
    len: usize,
    out: *mut f64,
) -> DcmStatus {
    guard(|| {
        let lam = slice(lam, len, "lam")?;
        write(out, quotient(k, l, lam)?, "out")
    })
}

/// Whether the `𝒫`-sums of `λ ∈ ℝⁿ` lie in `Γ_k`.
///
/// # Safety
/// `lam` must point to `n` readable doubles and `out` to a writable bool.
#[no_mangle]
pub unsafe extern "C" fn dcm_in_pk_cone(
    lam: *const f64,
    n: usize,
    big_p: usize,
    k: usize,
    out: *mut bool,
) -> DcmStatus {
    guard(|| {
        let lam = slice(lam, n, "lam")?;
        if big_p == 0 || big_p > n {
            return Err(invalid(format!("P = {big_p} must lie in 1..={n}")));
        }
        write(out, in_pk_cone(lam, big_p, k), "out")
    })
}

/// Create a problem on a grid. `resolution` holds `[M]` for the axisymmetric
/// backend and `[n_theta]` or `[n_theta, n_phi]` for the full `S²` grid.
///
/// # Safety
/// `resolution` must point to `resolution_len` readable values and `out` to a
/// writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn dcm_problem_new(
    n: usize,
    big_p: usize,
    k: usize,
    l: usize,
    p: f64,
    q: f64,
    backend: DcmBackend,
    resolution: *const usize,
    resolution_len: usize,
    out: *mut *mut DcmProblem,
) -> DcmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        out.write(ptr::null_mut());
        if resolution.is_null() || resolution_len == 0 {
            return Err(null("resolution"));
        }
        let res = std::slice::from_raw_parts(resolution, resolution_len);
        let spec = ProblemSpec::new(n, big_p, k, l, p, q)?;
        let backend = match backend {
            DcmBackend::Axisym => Backend::Axisym,
            DcmBackend::FullS2 => Backend::FullS2,
        };
        let grid = SphereGrid::from_resolution(backend, n, res)?;
        out.write(Box::into_raw(Box::new(DcmProblem {
            spec,
            grid,
            phi: None,
        })));
        Ok(())
    })
}

/// Number of grid nodes.
///
/// # Safety
/// `problem` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dcm_problem_node_count(
    problem: *const DcmProblem,
    out: *mut usize,
) -> DcmStatus {
    guard(|| write(out, handle(problem, "problem")?.grid.len(), "out"))
}

/// Node colatitudes and longitudes, `len` each.
///
/// # Safety
/// `problem` must be a live handle; `theta` and `phi` must hold `len` writable
/// doubles, `len` equal to the node count.
#[no_mangle]
pub unsafe extern "C" fn dcm_problem_nodes(
    problem: *const DcmProblem,
    theta: *mut f64,
    phi: *mut f64,
    len: usize,
) -> DcmStatus {
    guard(|| {
        let pr = handle(problem, "problem")?;
        if len != pr.grid.len() {
            return Err(invalid(format!(
                "len {len} differs from node count {}",
                pr.grid.len()
            )));
        }
        slice_mut(theta, len, "theta")?.copy_from_slice(pr.grid.theta());
        slice_mut(phi, len, "phi")?.copy_from_slice(pr.grid.phi());
        Ok(())
    })
}

/// Set `φ` to a positive constant.
///
/// # Safety
/// `problem` must be a live handle not shared with another thread.
#[no_mangle]
pub unsafe extern "C" fn dcm_problem_set_phi_constant(
    problem: *mut DcmProblem,
    value: f64,
) -> DcmStatus {
    guard(|| {
        let pr = problem.as_mut().ok_or_else(|| null("problem"))?;
        if !(value.is_finite() && value > 0.0) {
            return Err(Failure(
                DcmStatus::Domain,
                format!("φ must be positive, got {value}"),
            ));
        }
        pr.phi = Some(vec![value; pr.grid.len()]);
        Ok(())
    })
}

/// Set `φ` node by node; `len` must equal the node count.
///
/// # Safety
/// `problem` must be a live handle not shared with another thread and
/// `values` must point to `len` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn dcm_problem_set_phi_values(
    problem: *mut DcmProblem,
    values: *const f64,
    len: usize,
) -> DcmStatus {
    guard(|| {
        let pr = problem.as_mut().ok_or_else(|| null("problem"))?;
        let values = slice(values, len, "values")?;
        if len != pr.grid.len() {
            return Err(invalid(format!(
                "len {len} differs from node count {}",
                pr.grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Failure(
                DcmStatus::Domain,
                format!("φ at node {i} is not positive"),
            ));
        }
        pr.phi = Some(values.to_vec());
        Ok(())
    })
}

/// # Safety
/// `problem` must be null or a handle from [`dcm_problem_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dcm_problem_free(problem: *mut DcmProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

fn build(pr: &DcmProblem) -> Result<Problem, Failure> {
    let phi = pr
        .phi
        .clone()
        .ok_or_else(|| invalid("φ is not set; call a dcm_problem_set_phi_* function first"))?;
    Ok(Problem::new(pr.spec.clone(), pr.grid.clone(), phi)?)
}

/// Continuation solve of the nonhomogeneous problem.
///
/// # Safety
/// `problem` must be a live handle and `out` a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn dcm_solve(
    problem: *const DcmProblem,
    out: *mut *mut DcmSolution,
) -> DcmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        out.write(ptr::null_mut());
        let problem = build(handle(problem, "problem")?)?;
        let states = continuation(&problem, &ContinuationOptions::default())?;
        let field = states
            .into_iter()
            .last()
            .expect("continuation yields states")
            .field;
        out.write(Box::into_raw(Box::new(DcmSolution {
            field,
            gamma: f64::NAN,
        })));
        Ok(())
    })
}

/// Solve the homogeneous problem for `(γ, u)`. The solution holds the
/// normalized limit profile and `γ`.
///
/// # Safety
/// `problem` must be a live handle and `out` a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn dcm_homogeneous_solve(
    problem: *const DcmProblem,
    out: *mut *mut DcmSolution,
) -> DcmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        out.write(ptr::null_mut());
        let problem = build(handle(problem, "problem")?)?;
        let res = homogeneous_solve(&problem, &HomogeneousOptions::default())?;
        out.write(Box::into_raw(Box::new(DcmSolution {
            field: res.limit_field,
            gamma: res.gamma,
        })));
        Ok(())
    })
}

/// Structural check on the problem's `φ`: pass flag and smallest eigenvalue.
///
/// # Safety
/// `problem` must be a live handle; `pass` and `min_eig` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dcm_check_phi(
    problem: *const DcmProblem,
    pass: *mut bool,
    min_eig: *mut f64,
) -> DcmStatus {
    guard(|| {
        let pr = handle(problem, "problem")?;
        let phi = pr.phi.as_ref().ok_or_else(|| invalid("φ is not set"))?;
        let report = check_phi(phi, &pr.grid, &pr.spec)?;
        write(pass, report.pass, "pass")?;
        write(min_eig, report.min_eig, "min_eig")
    })
}

/// Number of nodes in a solution.
///
/// # Safety
/// `solution` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dcm_solution_len(
    solution: *const DcmSolution,
    out: *mut usize,
) -> DcmStatus {
    guard(|| write(out, handle(solution, "solution")?.field.u().len(), "out"))
}

/// Copy the nodal values of `u`.
///
/// # Safety
/// `solution` must be a live handle and `out` must hold `len` writable
/// doubles, `len` equal to [`dcm_solution_len`].
#[no_mangle]
pub unsafe extern "C" fn dcm_solution_u(
    solution: *const DcmSolution,
    out: *mut f64,
    len: usize,
) -> DcmStatus {
    guard(|| {
        let u = handle(solution, "solution")?.field.u();
        if len != u.len() {
            return Err(invalid(format!(
                "len {len} differs from node count {}",
                u.len()
            )));
        }
        slice_mut(out, len, "out")?.copy_from_slice(u);
        Ok(())
    })
}

/// Smallest eigenvalue of `∇²u + uI` over nodes.
///
/// # Safety
/// `solution` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dcm_solution_min_eig(
    solution: *const DcmSolution,
    out: *mut f64,
) -> DcmStatus {
    guard(|| write(out, handle(solution, "solution")?.field.min_eig(), "out"))
}

/// `γ` of a homogeneous solve; `Domain` for other solutions.
///
/// # Safety
/// `solution` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dcm_solution_gamma(
    solution: *const DcmSolution,
    out: *mut f64,
) -> DcmStatus {
    guard(|| {
        let gamma = handle(solution, "solution")?.gamma;
        if gamma.is_nan() {
            return Err(Failure(
                DcmStatus::Domain,
                "solution is not from a homogeneous solve".into(),
            ));
        }
        write(out, gamma, "out")
    })
}

/// # Safety
/// `solution` must be null or a handle from a solve not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dcm_solution_free(solution: *mut DcmSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}
