//! The `𝒫`-eigenvalue map `Λ`, the `(𝒫,k)`-cone, the derivation matrix `W`
//! of `D_A` on `Λ^𝒫ℝⁿ`, and the Hessian-quotient operator
//! `F = σ_k(Λ)/σ_l(Λ)` with its normalized and hatted transforms.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::multiindex::{enumerate, perm_sign, IndexTable};
use crate::symfunc::{binomial, cone_margin, quotient, quotient_grad, sigma_all};

/// `Λ_I = Σ_{i∈I} λ_i` for every `I` of an [`IndexTable`], in table order.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaVector(Vec<f64>);

impl LambdaVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

pub fn lambda_vector(lam: &[f64], table: &IndexTable) -> Result<LambdaVector> {
    if lam.len() != table.n() {
        return Err(Error::DimensionMismatch {
            expected: table.n(),
            got: lam.len(),
        });
    }
    Ok(LambdaVector(
        table
            .indices()
            .iter()
            .map(|idx| idx.zero_based().map(|i| lam[i]).sum())
            .collect(),
    ))
}

/// `λ` lies in the `(𝒫,k)`-cone, i.e. `Λ(λ) ∈ Γ_k ⊂ ℝᴺ`. Invalid `(𝒫,k)`
/// for the given length reports `false`.
pub fn in_pk_cone(lam: &[f64], p: usize, k: usize) -> bool {
    let Ok(table) = enumerate(p, lam.len()) else {
        return false;
    };
    if k == 0 || k > table.len() {
        return false;
    }
    let big = lambda_vector(lam, &table).expect("table built for this length");
    cone_margin(big.values(), k) > 0.0
}

/// Matrix of the derivation `D_A` in the basis `e_I`, `I ∈ 𝔍(𝒫,n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivationMatrix(DMatrix<f64>);

impl DerivationMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    /// Eigenvalues, sorted descending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        sorted_eigenvalues(&self.0)
    }
}

fn max_asymmetry(a: &DMatrix<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..a.nrows() {
        for j in 0..i {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

fn check_symmetric(a: &DMatrix<f64>, n: usize) -> Result<()> {
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.nrows().max(a.ncols()),
        });
    }
    let asym = max_asymmetry(a);
    let scale = a.amax().max(1.0);
    if asym > 1e-12 * scale {
        return Err(Error::Asymmetric(asym));
    }
    Ok(())
}

/// `W_II = Σ_{i∈I} a_ii`; `W_IJ = σ(i,I−i)σ(j,J−j)a_ij` when `I = i+K`,
/// `J = j+K`, `|K| = 𝒫−1`, `i ≠ j`; zero otherwise.
pub fn derivation_matrix(a: &DMatrix<f64>, table: &IndexTable) -> Result<DerivationMatrix> {
    let n = table.n();
    check_symmetric(a, n)?;
    let big_n = table.len();
    let mut w = DMatrix::zeros(big_n, big_n);
    for (row, idx) in table.indices().iter().enumerate() {
        w[(row, row)] = idx.zero_based().map(|i| a[(i, i)]).sum();
        for &i in idx.entries() {
            let rest = idx.remove(i).expect("i ∈ I");
            let si = perm_sign(&crate::multiindex::MultiIndex::new(vec![i], n)?, &rest)?;
            for j in 1..=n {
                if idx.contains(j) {
                    continue;
                }
                let target = rest.add(j).expect("j ∉ I − i");
                let col = table.position(&target).expect("table is complete");
                let sj = perm_sign(&crate::multiindex::MultiIndex::new(vec![j], n)?, &rest)?;
                w[(row, col)] = f64::from(si * sj) * a[(i - 1, j - 1)];
            }
        }
    }
    Ok(DerivationMatrix(w))
}

/// Which transform of `F = σ_k(Λ)/σ_l(Λ)` to evaluate. All three are strictly
/// increasing functions of `F` on the cone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum OperatorMode {
    /// `F`
    Raw,
    /// `F̃ = F^{1/(k−l)}`
    Normalized,
    /// `F̂ = −F^{−1/(k−l)}`
    Hatted,
}

impl OperatorMode {
    /// Mode value and `d(mode)/dF` at raw value `f`, with `m = k − l`.
    pub fn apply(self, f: f64, m: f64) -> (f64, f64) {
        match self {
            OperatorMode::Raw => (f, 1.0),
            OperatorMode::Normalized => {
                let v = f.powf(1.0 / m);
                (v, v / (m * f))
            }
            OperatorMode::Hatted => {
                let v = f.powf(-1.0 / m);
                (-v, v / (m * f))
            }
        }
    }
}

/// Eigenvalues (descending) and matching eigenvectors (columns). Diagonal
/// input is passed through exactly.
pub(crate) fn eigen_desc(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || a[(i, j)] == 0.0));
    let (vals, vecs) = if diagonal {
        (
            (0..n).map(|i| a[(i, i)]).collect::<Vec<_>>(),
            DMatrix::identity(n, n),
        )
    } else {
        let eig = SymmetricEigen::new(a.clone());
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| vals[y].total_cmp(&vals[x]));
    let sorted_vals = order.iter().map(|&i| vals[i]).collect();
    let sorted_vecs = DMatrix::from_fn(n, n, |r, c| vecs[(r, order[c])]);
    (sorted_vals, sorted_vecs)
}

pub(crate) fn sorted_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    eigen_desc(a).0
}

/// The operator `λ ↦ σ_k(Λ(λ))/σ_l(Λ(λ))` for fixed `(n, 𝒫, k, l)`.
#[derive(Debug, Clone)]
pub struct QuotientOperator {
    k: usize,
    l: usize,
    table: Arc<IndexTable>,
}

impl QuotientOperator {
    /// Requires `1 ≤ 𝒫 ≤ n`, `n ≥ 2` and `0 ≤ l < k ≤ N = C(n,𝒫)`.
    pub fn new(n: usize, p: usize, k: usize, l: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("need n ≥ 2, got {n}")));
        }
        let table = enumerate(p, n)?;
        let big_n = table.len();
        if !(l < k && k <= big_n) {
            return Err(Error::InvalidParameter(format!(
                "need 0 ≤ l < k ≤ N = C({n},{p}) = {big_n}, got k = {k}, l = {l}"
            )));
        }
        Ok(QuotientOperator {
            k,
            l,
            table: Arc::new(table),
        })
    }

    pub fn n(&self) -> usize {
        self.table.n()
    }

    pub fn p(&self) -> usize {
        self.table.p()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn l(&self) -> usize {
        self.l
    }

    /// `N = C(n, 𝒫)`.
    pub fn big_n(&self) -> usize {
        self.table.len()
    }

    pub fn table(&self) -> &IndexTable {
        &self.table
    }

    /// `k − l` as a float.
    pub fn order(&self) -> f64 {
        (self.k - self.l) as f64
    }

    /// `C(N,k)/C(N,l)·𝒫^{k−l}`: the value of `F` at `λ = (1, …, 1)`.
    pub fn symmetric_constant(&self) -> f64 {
        let big_n = self.big_n();
        binomial(big_n, self.k) as f64 / binomial(big_n, self.l) as f64
            * (self.p() as f64).powi((self.k - self.l) as i32)
    }

    /// Whether `k ≤ C(n−1, 𝒫−1)`, the range where the operator is uniformly
    /// elliptic in `λ`.
    pub fn uniformly_elliptic_range(&self) -> bool {
        self.k <= binomial(self.n() - 1, self.p() - 1)
    }

    pub fn lambda(&self, lam: &[f64]) -> Result<LambdaVector> {
        lambda_vector(lam, &self.table)
    }

    /// `min_{1≤j≤k} σ_j(Λ(λ))`.
    pub fn margin(&self, lam: &[f64]) -> Result<f64> {
        Ok(cone_margin(self.lambda(lam)?.values(), self.k))
    }

    pub fn in_cone(&self, lam: &[f64]) -> bool {
        self.margin(lam).map(|m| m > 0.0).unwrap_or(false)
    }

    /// `F` and the selected transform from a spectrum.
    pub fn value(&self, lam: &[f64], mode: OperatorMode) -> Result<f64> {
        let big = self.lambda(lam)?;
        let f = quotient(self.k, self.l, big.values())?;
        Ok(mode.apply(f, self.order()).0)
    }

    /// `∂F/∂Λ_I` (raw mode) for every `I`.
    pub fn grad_big_lambda(&self, lam: &[f64]) -> Result<Vec<f64>> {
        let big = self.lambda(lam)?;
        quotient_grad(self.k, self.l, big.values())
    }

    /// `∂(mode F)/∂λ_i`.
    pub fn grad_lambda(&self, lam: &[f64], mode: OperatorMode) -> Result<Vec<f64>> {
        let big = self.lambda(lam)?;
        let s = sigma_all(big.values(), self.k);
        let f = s[self.k] / s[self.l];
        let dbig = quotient_grad(self.k, self.l, big.values())?;
        let (_, dmode) = mode.apply(f, self.order());
        let mut g = vec![0.0; self.n()];
        for (idx, d) in self.table.indices().iter().zip(&dbig) {
            for i in idx.zero_based() {
                g[i] += d;
            }
        }
        g.iter_mut().for_each(|x| *x *= dmode);
        Ok(g)
    }

    /// Eigen-path evaluation of the selected transform at a symmetric matrix.
    pub fn f_value(&self, a: &DMatrix<f64>, mode: OperatorMode) -> Result<f64> {
        check_symmetric(a, self.n())?;
        self.value(&sorted_eigenvalues(a), mode)
    }

    /// W-path evaluation: `σ_k/σ_l` of the eigenvalues of `W(A)`.
    pub fn f_value_w(&self, a: &DMatrix<f64>, mode: OperatorMode) -> Result<f64> {
        let w = derivation_matrix(a, &self.table)?;
        let f = quotient(self.k, self.l, &w.eigenvalues())?;
        Ok(mode.apply(f, self.order()).0)
    }

    /// `F^{ij} = ∂(mode F)/∂a_ij` as a symmetric matrix, `Q diag(∂F/∂λ) Qᵀ`.
    pub fn f_grad(&self, a: &DMatrix<f64>, mode: OperatorMode) -> Result<DMatrix<f64>> {
        check_symmetric(a, self.n())?;
        let (vals, vecs) = eigen_desc(a);
        let g = self.grad_lambda(&vals, mode)?;
        let n = self.n();
        let mut out = DMatrix::zeros(n, n);
        for (c, gc) in g.iter().enumerate() {
            let v = vecs.column(c);
            out += *gc * v * v.transpose();
        }
        Ok(out)
    }

    /// `Σ (∂²F̂/∂a_ij∂a_rs + 2 ∂F̂/∂a_ir a^{js}) ξ_ij ξ_rs` for symmetric `ξ`,
    /// the second derivative taken by a five-point difference of
    /// [`Self::f_grad`] along `ξ` with step `step`.
    pub fn inverse_convexity_form(
        &self,
        a: &DMatrix<f64>,
        xi: &DMatrix<f64>,
        step: f64,
    ) -> Result<f64> {
        check_symmetric(xi, self.n())?;
        let g = |s: f64| self.f_grad(&(a + xi * s), OperatorMode::Hatted);
        let d = (g(-2.0 * step)? - g(2.0 * step)? + (g(step)? - g(-step)?) * 8.0) / (12.0 * step);
        let second = d.component_mul(xi).sum();
        let inv = a
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidParameter("matrix is singular".into()))?;
        let grad = self.f_grad(a, OperatorMode::Hatted)?;
        let cross = (&grad * xi * inv * xi).trace();
        Ok(second + 2.0 * cross)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dmatrix;

    #[test]
    fn lambda_vector_examples() {
        let t = enumerate(2, 3).unwrap();
        assert_eq!(
            lambda_vector(&[1.0, 10.0, 100.0], &t).unwrap().values(),
            &[11.0, 101.0, 110.0]
        );
        let t = enumerate(3, 5).unwrap();
        let v = lambda_vector(&[1.0; 5], &t).unwrap();
        assert!(v.values().iter().all(|&x| x == 3.0));
        let t = enumerate(2, 4).unwrap();
        assert_eq!(
            lambda_vector(&[3.0, 1.0, 1.0, -1.0], &t).unwrap().values(),
            &[4.0, 4.0, 2.0, 2.0, 0.0, 0.0]
        );
        assert!(lambda_vector(&[1.0, 2.0], &t).is_err());
    }

    #[test]
    fn lambda_sum_invariant() {
        let lam = [0.3, -1.2, 2.5, 0.9, 1.7];
        for p in 1..=5 {
            let t = enumerate(p, 5).unwrap();
            let total: f64 = lambda_vector(&lam, &t).unwrap().values().iter().sum();
            let expected = binomial(4, p - 1) as f64 * lam.iter().sum::<f64>();
            assert_relative_eq!(total, expected, max_relative = 1e-14);
        }
    }

    #[test]
    fn pk_cone_examples() {
        assert!(in_pk_cone(&[1.0, 1.0, 1.0], 2, 3));
        assert!(in_pk_cone(&[1.0, 1.0, 1.0], 1, 2));
        // Λ = (4,4,2,2,0,0): σ₁ = 12, σ₂ = 52
        assert!(in_pk_cone(&[3.0, 1.0, 1.0, -1.0], 2, 2));
        assert!(!in_pk_cone(&[-1.0, 3.0], 1, 2));
        assert!(!in_pk_cone(&[1.0, 1.0], 3, 1));
    }

    #[test]
    fn derivation_matrix_diagonal_and_identity() {
        let t = enumerate(2, 3).unwrap();
        let a = DMatrix::from_diagonal(&nalgebra::dvector![1.0, 10.0, 100.0]);
        let w = derivation_matrix(&a, &t).unwrap();
        assert_eq!(
            w.matrix(),
            &DMatrix::from_diagonal(&nalgebra::dvector![11.0, 101.0, 110.0])
        );
        for (n, p) in [(3, 2), (4, 2), (5, 3), (4, 1), (4, 4)] {
            let t = enumerate(p, n).unwrap();
            let w = derivation_matrix(&DMatrix::identity(n, n), &t).unwrap();
            assert_eq!(
                w.matrix(),
                &(DMatrix::identity(t.len(), t.len()) * p as f64)
            );
        }
    }

    #[test]
    fn derivation_matrix_sign_pattern_n3_p2() {
        let t = enumerate(2, 3).unwrap();
        let a = dmatrix![1.0, 2.0, 3.0; 2.0, 5.0, 7.0; 3.0, 7.0, 11.0];
        let w = derivation_matrix(&a, &t).unwrap();
        let expected = dmatrix![
            1.0 + 5.0, 7.0, -3.0;
            7.0, 1.0 + 11.0, 2.0;
            -3.0, 2.0, 5.0 + 11.0
        ];
        assert_eq!(w.matrix(), &expected);
        let mut got = w.eigenvalues();
        let lam = sorted_eigenvalues(&a);
        let mut pair_sums = vec![lam[0] + lam[1], lam[0] + lam[2], lam[1] + lam[2]];
        pair_sums.sort_by(|x, y| y.total_cmp(x));
        got.sort_by(|x, y| y.total_cmp(x));
        for (g, e) in got.iter().zip(&pair_sums) {
            assert_relative_eq!(g, e, epsilon = 1e-12);
        }
    }

    #[test]
    fn derivation_matrix_rejects_asymmetric() {
        let t = enumerate(2, 3).unwrap();
        let a = dmatrix![1.0, 2.0, 0.0; 0.0, 1.0, 0.0; 0.0, 0.0, 1.0];
        assert!(matches!(
            derivation_matrix(&a, &t),
            Err(Error::Asymmetric(_))
        ));
    }

    #[test]
    fn f_value_examples() {
        // A = u·I: F = C(N,k)/C(N,l)·(𝒫u)^{k−l}
        let op = QuotientOperator::new(3, 2, 2, 0).unwrap();
        let u = 1.7;
        let a = DMatrix::identity(3, 3) * u;
        let f = op.f_value(&a, OperatorMode::Raw).unwrap();
        assert_relative_eq!(f, 3.0 * (2.0 * u).powi(2), max_relative = 1e-14);

        let op = QuotientOperator::new(3, 2, 1, 0).unwrap();
        let f = op
            .f_value(&DMatrix::identity(3, 3), OperatorMode::Hatted)
            .unwrap();
        assert_relative_eq!(f, -1.0 / 6.0, max_relative = 1e-14);

        let op = QuotientOperator::new(4, 4, 1, 0).unwrap();
        let a = DMatrix::from_diagonal(&nalgebra::dvector![0.5, 1.0, 2.0, 3.5]);
        assert_relative_eq!(
            op.f_value(&a, OperatorMode::Raw).unwrap(),
            7.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn eigen_and_w_paths_agree() {
        let op = QuotientOperator::new(4, 2, 3, 1).unwrap();
        let a = dmatrix![
            2.0, 0.3, -0.1, 0.2;
            0.3, 1.5, 0.4, 0.0;
            -0.1, 0.4, 1.2, 0.25;
            0.2, 0.0, 0.25, 0.9
        ];
        for mode in [
            OperatorMode::Raw,
            OperatorMode::Normalized,
            OperatorMode::Hatted,
        ] {
            let e = op.f_value(&a, mode).unwrap();
            let w = op.f_value_w(&a, mode).unwrap();
            assert_relative_eq!(e, w, max_relative = 1e-10);
        }
    }

    #[test]
    fn f_grad_examples() {
        for (n, p) in [(3, 2), (4, 2), (5, 3)] {
            let op = QuotientOperator::new(n, p, 1, 0).unwrap();
            let g = op
                .f_grad(&DMatrix::identity(n, n), OperatorMode::Raw)
                .unwrap();
            let c = binomial(n - 1, p - 1) as f64;
            assert_relative_eq!(g, DMatrix::identity(n, n) * c, epsilon = 1e-13);
        }
        let op = QuotientOperator::new(4, 2, 3, 1).unwrap();
        let a = dmatrix![
            2.0, 0.3, -0.1, 0.2;
            0.3, 1.5, 0.4, 0.0;
            -0.1, 0.4, 1.2, 0.25;
            0.2, 0.0, 0.25, 0.9
        ];
        let g = op.f_grad(&a, OperatorMode::Raw).unwrap();
        let f = op.f_value(&a, OperatorMode::Raw).unwrap();
        assert_relative_eq!(g.component_mul(&a).sum(), 2.0 * f, max_relative = 1e-12);
    }

    #[test]
    fn f_grad_matches_finite_differences() {
        let op = QuotientOperator::new(3, 2, 2, 1).unwrap();
        let a = dmatrix![1.3, 0.2, -0.4; 0.2, 0.8, 0.1; -0.4, 0.1, 1.1];
        for mode in [
            OperatorMode::Raw,
            OperatorMode::Normalized,
            OperatorMode::Hatted,
        ] {
            let g = op.f_grad(&a, mode).unwrap();
            for i in 0..3 {
                for j in 0..=i {
                    let mut e = DMatrix::zeros(3, 3);
                    e[(i, j)] = 1.0;
                    e[(j, i)] = 1.0;
                    let h = 1e-6;
                    let fd = (op.f_value(&(&a + &e * h), mode).unwrap()
                        - op.f_value(&(&a - &e * h), mode).unwrap())
                        / (2.0 * h);
                    let analytic = if i == j { g[(i, i)] } else { 2.0 * g[(i, j)] };
                    assert_relative_eq!(fd, analytic, max_relative = 1e-6, epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn operator_rejects_bad_tuples() {
        assert!(QuotientOperator::new(3, 2, 4, 0).is_err());
        assert!(QuotientOperator::new(3, 2, 1, 1).is_err());
        assert!(QuotientOperator::new(3, 4, 1, 0).is_err());
        assert!(QuotientOperator::new(1, 1, 1, 0).is_err());
    }

    #[test]
    fn cone_violation_is_reported() {
        let op = QuotientOperator::new(2, 1, 2, 0).unwrap();
        let a = DMatrix::from_diagonal(&nalgebra::dvector![-1.0, 3.0]);
        assert!(matches!(
            op.f_value(&a, OperatorMode::Raw),
            Err(Error::ConeViolation { .. })
        ));
    }

    #[test]
    fn modes_are_increasing_in_raw_value() {
        let op = QuotientOperator::new(4, 2, 2, 0).unwrap();
        let small = [1.0, 0.9, 0.8, 0.7];
        let large = [1.1, 0.9, 0.8, 0.7];
        for mode in [
            OperatorMode::Raw,
            OperatorMode::Normalized,
            OperatorMode::Hatted,
        ] {
            assert!(op.value(&small, mode).unwrap() < op.value(&large, mode).unwrap());
        }
    }
}
