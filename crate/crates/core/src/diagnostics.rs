//! Checks on the structural hypothesis for `φ`, construction of admissible
//! `φ`, and a-priori bound reports for computed solutions.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::problem::{ExponentCase, ProblemSpec};
use crate::solver::EpsRecord;
use crate::sphere::{FrameEigen, SolutionField, SphereGrid};

/// Tolerance on the smallest eigenvalue for a structural check to pass.
pub const PHI_TOL: f64 = 1e-10;

/// Exponent regime of the existence result for `p > q − l`.
/// The homogeneous case uses the label of the matching `q` range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PhiCase {
    /// `q − l < 1`
    I,
    /// `q − l ≥ 1`, `q ≤ k + 1`
    II,
    /// `q > k + 1`
    III,
}

#[derive(Debug, Clone, Serialize)]
pub struct PhiReport {
    pub case_id: PhiCase,
    pub beta: f64,
    /// Smallest eigenvalue of `∇²h + βh·I` over nodes, `h = φ^{−1/(k−l+p−1)}`.
    pub min_eig: f64,
    pub worst_node: usize,
    pub pass: bool,
    /// Whether `(p, q)` meet the exponent conditions for existence.
    pub existence_conditions: bool,
    /// Whether `(p, q)` meet the exponent conditions for constant rank.
    pub full_rank_conditions: bool,
    /// Exponent conditions that fail, if any.
    pub binding: Vec<String>,
}

/// Case, multiplier `β`, and which exponent conditions fail.
pub fn classify(spec: &ProblemSpec) -> (PhiCase, f64, bool, bool, Vec<String>) {
    let (k, l, p, q) = (spec.k() as f64, spec.l() as f64, spec.p(), spec.q());
    let case = if q - l < 1.0 {
        PhiCase::I
    } else if q <= k + 1.0 {
        PhiCase::II
    } else {
        PhiCase::III
    };
    let beta = if q <= k + 1.0 {
        1.0
    } else {
        (2.0 * k + p - l - 1.0) / spec.m()
    };
    let mut binding = Vec::new();
    let existence = match spec.case() {
        ExponentCase::Nonhomogeneous => {
            if case == PhiCase::I && p < 1.0 {
                binding.push(format!("existence needs p ≥ 1 when q − l < 1 (p = {p})"));
                false
            } else {
                true
            }
        }
        ExponentCase::Homogeneous => {
            if p > 1.0 {
                true
            } else {
                binding.push(format!(
                    "the homogeneous case needs p = q − l > 1 (p = {p})"
                ));
                false
            }
        }
    };
    let mut full_rank = true;
    if p < 1.0 {
        binding.push(format!("full rank needs p ≥ 1 (p = {p})"));
        full_rank = false;
    }
    if q > k + 1.0 && q >= 2.0 * k - l + p {
        binding.push(format!(
            "full rank needs q < 2k − l + p = {} when q > k + 1 (q = {q})",
            2.0 * k - l + p
        ));
        full_rank = false;
    }
    (case, beta, existence, full_rank, binding)
}

fn check_positive(values: &[f64]) -> Result<()> {
    if let Some(node) = values.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
        return Err(Error::NonPositive {
            node,
            value: values[node],
        });
    }
    Ok(())
}

/// Smallest eigenvalue of `∇²h + β·h·I` over nodes, and where it occurs.
fn min_shifted_eig(h: &[f64], grid: &SphereGrid, beta: f64) -> Result<(f64, usize)> {
    let d = grid.derivatives(h)?;
    let mut worst = (f64::INFINITY, 0);
    for (i, di) in d.iter().enumerate() {
        let s = beta * h[i];
        let e = FrameEigen::new(grid.dim(), di.h[0] + s, di.h[1], di.h[2] + s).min();
        if e < worst.0 {
            worst = (e, i);
        }
    }
    Ok(worst)
}

/// Structural condition `∇²h + β·h·I ⪰ 0` with `h = φ^{−1/(k−l+p−1)}`, read
/// as a matrix inequality in every direction.
pub fn check_phi(phi: &[f64], grid: &SphereGrid, spec: &ProblemSpec) -> Result<PhiReport> {
    if phi.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            got: phi.len(),
        });
    }
    check_positive(phi)?;
    let (case_id, beta, existence, full_rank, binding) = classify(spec);
    let m = spec.m();
    let h: Vec<f64> = phi.iter().map(|f| f.powf(-1.0 / m)).collect();
    let (min_eig, worst_node) = min_shifted_eig(&h, grid, beta)?;
    Ok(PhiReport {
        case_id,
        beta,
        min_eig,
        worst_node,
        pass: min_eig >= -PHI_TOL,
        existence_conditions: existence,
        full_rank_conditions: full_rank,
        binding,
    })
}

/// `φ = h^{−(k−l+p−1)}` for a spherically convex `h` (`∇²h + h·I ⪰ 0`).
pub fn build_admissible_phi(
    h_base: &[f64],
    grid: &SphereGrid,
    spec: &ProblemSpec,
) -> Result<Vec<f64>> {
    if h_base.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            got: h_base.len(),
        });
    }
    check_positive(h_base)?;
    let (min_eig, node) = min_shifted_eig(h_base, grid, 1.0)?;
    if min_eig < -PHI_TOL {
        return Err(Error::Precondition(format!(
            "base function is not spherically convex: ∇²h + h·I has eigenvalue {min_eig:e} at node {node}"
        )));
    }
    let m = spec.m();
    Ok(h_base.iter().map(|h| h.powf(-m)).collect())
}

/// One two-sided bound with the attained extremes.
#[derive(Debug, Clone, Serialize)]
pub struct BoundCheck {
    pub name: String,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub attained_min: f64,
    pub attained_max: f64,
    pub slack: f64,
    pub pass: bool,
}

impl BoundCheck {
    fn new(name: &str, lower: Option<f64>, upper: Option<f64>, values: &[f64], h2: f64) -> Self {
        let attained_min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let attained_max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let scale = lower
            .unwrap_or(0.0)
            .abs()
            .max(upper.unwrap_or(0.0).abs())
            .max(1.0);
        let slack = 10.0 * h2 * scale;
        let pass = lower.is_none_or(|lo| attained_min >= lo - slack)
            && upper.is_none_or(|hi| attained_max <= hi + slack);
        BoundCheck {
            name: name.into(),
            lower,
            upper,
            attained_min,
            attained_max,
            slack,
            pass,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundsReport {
    pub spacing: f64,
    pub checks: Vec<BoundCheck>,
    /// Largest frame-Hessian entry of `u`; monitored, not bounded.
    pub max_abs_hessian: f64,
    pub min_eig_a: f64,
    pub pass: bool,
}

fn phi_extremes(phi: &[f64]) -> (f64, f64) {
    (
        phi.iter().copied().fold(f64::INFINITY, f64::min),
        phi.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    )
}

/// A-priori bounds for a computed solution. Nonhomogeneous case:
/// `c/max φ ≤ u^{p−q+l} ≤ c/min φ` and
/// `max |∇u|/u ≤ max |∇φ|/φ / (p−q+l)`, where `c = C(N,k)/C(N,l)·𝒫^{k−l}`.
/// Violations are flagged beyond `10h²`.
pub fn verify_bounds(
    field: &SolutionField,
    phi: &[f64],
    spec: &ProblemSpec,
) -> Result<BoundsReport> {
    let grid = field.grid();
    if phi.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            got: phi.len(),
        });
    }
    check_positive(phi)?;
    let h = grid.spacing();
    let c = spec.symmetric_constant();
    let (pmin, pmax) = phi_extremes(phi);
    let mut checks = Vec::new();
    if spec.case() == ExponentCase::Nonhomogeneous {
        let gap = spec.gap();
        let powered: Vec<f64> = field.u().iter().map(|u| u.powf(gap)).collect();
        checks.push(BoundCheck::new(
            "c0",
            Some(c / pmax),
            Some(c / pmin),
            &powered,
            h * h,
        ));
        let dphi = grid.derivatives(phi)?;
        let phi_ratio = dphi
            .iter()
            .zip(phi)
            .map(|(d, f)| d.grad_sq().sqrt() / f)
            .fold(0.0, f64::max);
        let ratios: Vec<f64> = field
            .derivs()
            .iter()
            .zip(field.u())
            .map(|(d, u)| d.grad_sq().sqrt() / u)
            .collect();
        checks.push(BoundCheck::new(
            "c1",
            None,
            Some(phi_ratio / gap),
            &ratios,
            h * h,
        ));
    }
    let max_abs_hessian = field
        .derivs()
        .iter()
        .flat_map(|d| d.h)
        .fold(0.0, |a: f64, b| a.max(b.abs()));
    Ok(BoundsReport {
        spacing: h,
        pass: checks.iter().all(|c| c.pass),
        checks,
        max_abs_hessian,
        min_eig_a: field.min_eig(),
    })
}

/// `ε`-independent bound for the regularized homogeneous problem:
/// `c/max φ ≤ (min u_ε)^ε ≤ c/min φ` for every recorded `ε`.
pub fn verify_gamma_bounds(
    records: &[EpsRecord],
    phi: &[f64],
    spec: &ProblemSpec,
    spacing: f64,
) -> Result<BoundCheck> {
    check_positive(phi)?;
    let c = spec.symmetric_constant();
    let (pmin, pmax) = phi_extremes(phi);
    let gammas: Vec<f64> = records.iter().map(|r| r.gamma).collect();
    Ok(BoundCheck::new(
        "gamma_eps",
        Some(c / pmax),
        Some(c / pmin),
        &gammas,
        spacing * spacing,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> ProblemSpec {
        ProblemSpec::new(3, 2, 2, 0, 4.0, 1.0).unwrap()
    }

    #[test]
    fn constant_phi_passes() {
        let g = SphereGrid::axisym(3, 33).unwrap();
        let s = spec();
        let r = check_phi(&vec![12.0; 33], &g, &s).unwrap();
        assert!(r.pass);
        let h = 12f64.powf(-1.0 / s.m());
        assert!((r.min_eig - r.beta * h).abs() < 1e-12);
        assert_eq!(r.case_id, PhiCase::II);
        assert_eq!(r.beta, 1.0);
    }

    #[test]
    fn built_phi_passes_its_own_check() {
        let s = spec();
        for g in [SphereGrid::axisym(3, 65).unwrap()] {
            let h = g.sample(|t, _| 1.0 + 0.1 * t.cos());
            let phi = build_admissible_phi(&h, &g, &s).unwrap();
            for (f, hb) in phi.iter().zip(&h) {
                assert!((f - hb.powf(-5.0)).abs() < 1e-12);
            }
            let r = check_phi(&phi, &g, &s).unwrap();
            assert!(r.pass, "{r:?}");
            for c in [0.5, 2.0] {
                let scaled: Vec<f64> = phi.iter().map(|f| c * f).collect();
                assert_eq!(check_phi(&scaled, &g, &s).unwrap().pass, r.pass);
            }
        }
        let s2 = ProblemSpec::new(2, 2, 1, 0, 2.0, 0.5).unwrap();
        let g = SphereGrid::full_s2(16, 32).unwrap();
        let h = g.sample(|t, p| 1.0 + 0.1 * t.cos() + 0.05 * t.sin() * p.cos());
        let phi = build_admissible_phi(&h, &g, &s2).unwrap();
        assert!(check_phi(&phi, &g, &s2).unwrap().pass);
    }

    #[test]
    fn steep_profile_fails() {
        let s = spec();
        let g = SphereGrid::axisym(3, 129).unwrap();
        let phi = g.sample(|t, _| (-10.0 * t.cos()).exp());
        let r = check_phi(&phi, &g, &s).unwrap();
        assert!(!r.pass);
        assert!(r.min_eig < 0.0);
        for c in [0.5, 2.0] {
            let scaled: Vec<f64> = phi.iter().map(|f| c * f).collect();
            assert!(!check_phi(&scaled, &g, &s).unwrap().pass);
        }
    }

    #[test]
    fn nonconvex_base_is_rejected() {
        let g = SphereGrid::axisym(3, 65).unwrap();
        let h = g.sample(|t, _| 1.0 + 0.9 * (2.0 * t).cos());
        assert!(matches!(
            build_admissible_phi(&h, &g, &spec()),
            Err(Error::Precondition(_))
        ));
        assert!(build_admissible_phi(&vec![-1.0; 65], &g, &spec()).is_err());
    }

    #[test]
    fn case_classification() {
        let (c, b, e, f, binding) = classify(&ProblemSpec::new(3, 2, 2, 1, 3.0, 2.5).unwrap());
        assert_eq!(c, PhiCase::II);
        assert_eq!(b, 1.0);
        assert!(e && f && binding.is_empty());
        let s = ProblemSpec::new(3, 2, 2, 1, 3.0, 3.5).unwrap();
        let (c, b, _, f, _) = classify(&s);
        assert_eq!(c, PhiCase::III);
        assert!((b - (4.0 + 3.0 - 1.0 - 1.0) / s.m()).abs() < 1e-15);
        assert!(f);
        // p < 1 fails both the existence and the full-rank exponent conditions
        let s = ProblemSpec::new(3, 2, 2, 1, 0.8, 1.5).unwrap();
        let (c, _, e, f, binding) = classify(&s);
        assert_eq!(c, PhiCase::I);
        assert!(!e && !f);
        assert_eq!(binding.len(), 2);
        // homogeneous: p = q − l > 1 and q > k + 1
        let s = ProblemSpec::new(3, 2, 2, 1, 3.0, 4.0).unwrap();
        let (c, _, e, f, binding) = classify(&s);
        assert_eq!(c, PhiCase::III);
        assert!(e && f);
        assert!(binding.is_empty());
    }
}
