//! Problem data for `σ_k(Λ)/σ_l(Λ) = u^{p−1}(u²+|∇u|²)^{(k+1−q)/2} φ`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lambda_op::QuotientOperator;

/// Relation between `p` and `q − l`, computed from the exponents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExponentCase {
    /// `p > q − l`: a unique solution exists.
    Nonhomogeneous,
    /// `p = q − l`: solvable only up to a constant `γ` and dilations.
    Homogeneous,
}

/// Exponent data and the operator. The right-hand side `φ` is supplied per
/// node alongside a grid.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    op: QuotientOperator,
    p: f64,
    q: f64,
    case: ExponentCase,
}

/// Tolerance for deciding `p = q − l`.
pub const HOMOGENEOUS_TOL: f64 = 1e-12;

impl ProblemSpec {
    pub fn new(n: usize, big_p: usize, k: usize, l: usize, p: f64, q: f64) -> Result<Self> {
        let op = QuotientOperator::new(n, big_p, k, l)?;
        Self::from_operator(op, p, q)
    }

    pub fn from_operator(op: QuotientOperator, p: f64, q: f64) -> Result<Self> {
        if !p.is_finite() || !q.is_finite() {
            return Err(Error::InvalidParameter("p and q must be finite".into()));
        }
        let gap = p - (q - op.l() as f64);
        let case = if gap.abs() < HOMOGENEOUS_TOL {
            ExponentCase::Homogeneous
        } else if gap > 0.0 {
            ExponentCase::Nonhomogeneous
        } else {
            return Err(Error::InvalidParameter(format!(
                "need p ≥ q − l, got p = {p}, q − l = {}",
                q - op.l() as f64
            )));
        };
        let spec = ProblemSpec { op, p, q, case };
        if spec.m() <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "need k − l + p − 1 > 0, got {}",
                spec.m()
            )));
        }
        Ok(spec)
    }

    pub fn op(&self) -> &QuotientOperator {
        &self.op
    }

    pub fn n(&self) -> usize {
        self.op.n()
    }

    pub fn big_p(&self) -> usize {
        self.op.p()
    }

    pub fn k(&self) -> usize {
        self.op.k()
    }

    pub fn l(&self) -> usize {
        self.op.l()
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn case(&self) -> ExponentCase {
        self.case
    }

    /// `q = k + 1`: the gradient factor drops out of the right-hand side.
    pub fn is_special_q(&self) -> bool {
        (self.q - (self.k() as f64 + 1.0)).abs() < HOMOGENEOUS_TOL
    }

    /// `k − l + p − 1`, the exponent linking `φ` to the homotopy variable
    /// `φ^{−1/(k−l+p−1)}`.
    pub fn m(&self) -> f64 {
        self.op.order() + self.p - 1.0
    }

    /// `p − q + l`.
    pub fn gap(&self) -> f64 {
        self.p - self.q + self.l() as f64
    }

    /// `(k + 1 − q)/2`, the exponent on `u² + |∇u|²`.
    pub fn gradient_exponent(&self) -> f64 {
        (self.k() as f64 + 1.0 - self.q) / 2.0
    }

    /// `C(N,k)/C(N,l)·𝒫^{k−l}`.
    pub fn symmetric_constant(&self) -> f64 {
        self.op.symmetric_constant()
    }

    /// The same equation with `p` replaced by `p + ε`.
    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "ε must be positive, got {eps}"
            )));
        }
        Self::from_operator(self.op.clone(), self.p + eps, self.q)
    }

    /// Constant solution for constant `φ = φ₀` in the nonhomogeneous case:
    /// `u = [C(N,k)/C(N,l)·𝒫^{k−l}/φ₀]^{1/(p−q+l)}`.
    pub fn constant_solution(&self, phi0: f64) -> Result<f64> {
        if self.case != ExponentCase::Nonhomogeneous {
            return Err(Error::Precondition(
                "constant solutions are unique only when p > q − l".into(),
            ));
        }
        if !(phi0 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "φ₀ must be positive, got {phi0}"
            )));
        }
        Ok((self.symmetric_constant() / phi0).powf(1.0 / self.gap()))
    }

    /// `φ_t = ((1−t)c^{−1/m} + tφ^{−1/m})^{−m}` with `c` the symmetric
    /// constant and `m = k − l + p − 1`. `u ≡ 1` solves the problem at `t = 0`.
    pub fn phi_t(&self, phi: f64, t: f64) -> f64 {
        let m = self.m();
        let c = self.symmetric_constant();
        ((1.0 - t) * c.powf(-1.0 / m) + t * phi.powf(-1.0 / m)).powf(-m)
    }

    /// Right-hand side `u^{p−1}(u²+|g|²)^{(k+1−q)/2}·φ`.
    pub fn rhs(&self, u: f64, grad_sq: f64, phi: f64) -> f64 {
        u.powf(self.p - 1.0) * (u * u + grad_sq).powf(self.gradient_exponent()) * phi
    }

    /// `(∂/∂u, ∂/∂|g|²)` of the right-hand side divided by its value.
    pub fn rhs_log_derivs(&self, u: f64, grad_sq: f64) -> (f64, f64) {
        let e = self.gradient_exponent();
        let s = u * u + grad_sq;
        ((self.p - 1.0) / u + 2.0 * e * u / s, e / s)
    }
}
