//! Elementary symmetric functions, their minors and derivatives, Hessian
//! quotients and Gårding cone membership.
//!
//! All functions work on plain slices so they apply equally to eigenvalue
//! vectors `λ ∈ ℝⁿ` and to their `𝒫`-sums `Λ ∈ ℝᴺ`. Coordinates are 0-based.

use std::ops::Deref;

use crate::error::{Error, Result};

/// Binomial coefficient `C(n, k)`, zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

/// Ordered list of eigenvalues of a symmetric `n × n` matrix, `n ≥ 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum(Vec<f64>);

impl Spectrum {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "spectrum needs at least 2 entries, got {}",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Spectrum(values))
    }

    /// Same values, sorted descending (`λ₁ ≥ … ≥ λₙ`).
    pub fn sorted_desc(&self) -> Spectrum {
        let mut v = self.0.clone();
        v.sort_by(|a, b| b.total_cmp(a));
        Spectrum(v)
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Spectrum {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Index of a Gårding cone `Γ_k`, `k ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct ConeLevel(usize);

impl ConeLevel {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("cone level must be ≥ 1".into()));
        }
        Ok(ConeLevel(k))
    }

    pub fn get(self) -> usize {
        self.0
    }
}

/// `σ_0, …, σ_kmax` of `lam` in one O(n·kmax) pass over prefix products.
pub fn sigma_all(lam: &[f64], kmax: usize) -> Vec<f64> {
    let mut e = vec![0.0; kmax + 1];
    e[0] = 1.0;
    for (seen, &x) in lam.iter().enumerate() {
        let top = kmax.min(seen + 1);
        for j in (1..=top).rev() {
            e[j] += x * e[j - 1];
        }
    }
    e
}

/// Elementary symmetric function `σ_k(λ)`; `σ_0 = 1`, and `σ_k = 0` for
/// `k < 0` or `k > n`.
pub fn sigma(k: isize, lam: &[f64]) -> f64 {
    if k < 0 || k as usize > lam.len() {
        return 0.0;
    }
    sigma_all(lam, k as usize)[k as usize]
}

/// `σ_k(λ|i)`: `σ_k` of `lam` with coordinate `i` deleted. Equals
/// `∂σ_{k+1}/∂λ_i`.
pub fn sigma_minor(k: isize, lam: &[f64], i: usize) -> Result<f64> {
    if i >= lam.len() {
        return Err(Error::IndexOutOfRange {
            index: i,
            len: lam.len(),
        });
    }
    if k < 0 || k as usize > lam.len() - 1 {
        return Ok(0.0);
    }
    let reduced: Vec<f64> = lam
        .iter()
        .enumerate()
        .filter_map(|(j, &x)| (j != i).then_some(x))
        .collect();
    Ok(sigma(k, &reduced))
}

/// `σ_0(λ|i), …, σ_kmax(λ|i)` for every coordinate `i`.
pub(crate) fn sigma_minors_all(lam: &[f64], kmax: usize) -> Vec<Vec<f64>> {
    let mut reduced = Vec::with_capacity(lam.len().saturating_sub(1));
    (0..lam.len())
        .map(|i| {
            reduced.clear();
            reduced.extend(
                lam.iter()
                    .enumerate()
                    .filter_map(|(j, &x)| (j != i).then_some(x)),
            );
            sigma_all(&reduced, kmax)
        })
        .collect()
}

/// `min_{1≤j≤k} σ_j(λ)`; positive exactly when `λ ∈ Γ_k`.
pub fn cone_margin(lam: &[f64], k: usize) -> f64 {
    let s = sigma_all(lam, k);
    s[1..].iter().copied().fold(f64::INFINITY, f64::min)
}

/// `λ ∈ Γ_level`, i.e. `σ_j(λ) > 0` for `1 ≤ j ≤ level` (strict, no tolerance).
pub fn in_gamma(lam: &[f64], level: ConeLevel) -> bool {
    cone_margin(lam, level.get()) > 0.0
}

fn check_quotient_args(k: usize, l: usize, lam: &[f64]) -> Result<Vec<f64>> {
    if l >= k {
        return Err(Error::InvalidParameter(format!(
            "quotient needs k > l, got k = {k}, l = {l}"
        )));
    }
    let s = sigma_all(lam, k);
    let margin = s[1..].iter().copied().fold(f64::INFINITY, f64::min);
    if !(margin > 0.0) {
        return Err(Error::ConeViolation { level: k, margin });
    }
    Ok(s)
}

/// `σ_k(λ)/σ_l(λ)` on `Γ_k`.
pub fn quotient(k: usize, l: usize, lam: &[f64]) -> Result<f64> {
    let s = check_quotient_args(k, l, lam)?;
    Ok(s[k] / s[l])
}

/// Gradient of `σ_k/σ_l`:
/// `(σ_{k-1}(λ|i)σ_l − σ_kσ_{l-1}(λ|i)) / σ_l²`.
pub fn quotient_grad(k: usize, l: usize, lam: &[f64]) -> Result<Vec<f64>> {
    let s = check_quotient_args(k, l, lam)?;
    let minors = sigma_minors_all(lam, k - 1);
    let sl = s[l];
    Ok(minors
        .iter()
        .map(|m| {
            let dk = m[k - 1];
            let dl = if l == 0 { 0.0 } else { m[l - 1] };
            (dk * sl - s[k] * dl) / (sl * sl)
        })
        .collect())
}

/// `[σ_k/σ_l]^{1/(k-l)}`, concave and 1-homogeneous on `Γ_k`.
pub fn quotient_root(k: usize, l: usize, lam: &[f64]) -> Result<f64> {
    Ok(quotient(k, l, lam)?.powf(1.0 / (k - l) as f64))
}

/// Gradient of [`quotient_root`].
pub fn quotient_root_grad(k: usize, l: usize, lam: &[f64]) -> Result<Vec<f64>> {
    let q = quotient(k, l, lam)?;
    let m = (k - l) as f64;
    let scale = q.powf(1.0 / m - 1.0) / m;
    Ok(quotient_grad(k, l, lam)?
        .into_iter()
        .map(|g| g * scale)
        .collect())
}
