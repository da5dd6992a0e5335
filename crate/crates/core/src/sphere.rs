//! Finite-difference grids on the sphere, frame derivatives, and the
//! per-node spectrum of `a = ∇²u + u·I`.
//!
//! Every derivative used by the solver is a fixed linear stencil in the node
//! values, stored once per grid. The same stencils give both the residual and
//! its exact Jacobian.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lambda_op::QuotientOperator;

/// Minimum nodes per dimension.
pub const MIN_RESOLUTION: usize = 8;

// slots of a stencil weight vector
pub(crate) const G1: usize = 0;
pub(crate) const G2: usize = 1;
pub(crate) const H11: usize = 2;
pub(crate) const H12: usize = 3;
pub(crate) const H22: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    /// Full `(θ, φ)` grid on `S²` with staggered colatitudes.
    FullS2,
    /// Functions of colatitude only on `Sⁿ`.
    Axisym,
}

impl std::fmt::Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Backend::FullS2 => "full_s2",
            Backend::Axisym => "axisym",
        })
    }
}

impl std::str::FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full_s2" => Ok(Backend::FullS2),
            "axisym" => Ok(Backend::Axisym),
            other => Err(Error::InvalidParameter(format!(
                "unknown backend `{other}` (expected full_s2 or axisym)"
            ))),
        }
    }
}

type Stencil = Vec<(usize, [f64; 5])>;

#[derive(Debug)]
struct GridInner {
    backend: Backend,
    dim: usize,
    n_theta: usize,
    n_phi: usize,
    theta: Vec<f64>,
    phi: Vec<f64>,
    spacing: f64,
    stencils: Vec<Stencil>,
    laplacian: Vec<Vec<(usize, f64)>>,
}

/// Nodes and derivative stencils. Cheap to clone.
#[derive(Debug, Clone)]
pub struct SphereGrid(Arc<GridInner>);

/// Gradient `(g₁, g₂)` and Hessian `(h₁₁, h₁₂, h₂₂)` in the orthonormal
/// frame `e₁ = ∂_θ`, `e₂` tangent to the latitude. In dimension `n > 2` the
/// value `h₂₂` fills every tangential diagonal slot.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FrameDerivs {
    pub g: [f64; 2],
    pub h: [f64; 3],
}

impl FrameDerivs {
    pub fn grad_sq(&self) -> f64 {
        self.g[0] * self.g[0] + self.g[1] * self.g[1]
    }
}

fn push(st: &mut Stencil, node: usize, slot: usize, w: f64) {
    if let Some(entry) = st.iter_mut().find(|(j, _)| *j == node) {
        entry.1[slot] += w;
    } else {
        let mut ws = [0.0; 5];
        ws[slot] = w;
        st.push((node, ws));
    }
}

/// `∫_a^b sin^{n−1}θ dθ`, the finite-volume weight of a colatitude cell.
fn cell_volume(dim: usize, a: f64, b: f64) -> f64 {
    const PANELS: usize = 16;
    let w = (b - a) / PANELS as f64;
    let f = |t: f64| t.sin().powi(dim as i32 - 1);
    let mut acc = f(a) + f(b);
    for j in 1..PANELS {
        acc += if j % 2 == 1 { 4.0 } else { 2.0 } * f(a + j as f64 * w);
    }
    acc * w / 3.0
}

impl SphereGrid {
    /// Axisymmetric grid on `Sⁿ`: `θ_i = iπ/(M−1)`, `i = 0, …, M−1`, with
    /// `u′ = 0` at both poles.
    pub fn axisym(dim: usize, m: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidParameter(format!(
                "need sphere dimension ≥ 2, got {dim}"
            )));
        }
        if m < MIN_RESOLUTION {
            return Err(Error::ResolutionTooCoarse {
                got: m,
                min: MIN_RESOLUTION,
            });
        }
        let h = PI / (m - 1) as f64;
        let theta: Vec<f64> = (0..m).map(|i| i as f64 * h).collect();
        let h2 = h * h;
        let mut stencils = Vec::with_capacity(m);
        let mut laplacian = Vec::with_capacity(m);
        let wsin = |t: f64| t.sin().powi(dim as i32 - 1);
        #[allow(clippy::needless_range_loop)]
        for i in 0..m {
            let mut st = Stencil::new();
            if i == 0 || i == m - 1 {
                // reflected ghost: u₋₁ = u₁, so u′ = 0 and cot θ·u′ → u″
                let nb = if i == 0 { 1 } else { m - 2 };
                for slot in [H11, H22] {
                    push(&mut st, i, slot, -2.0 / h2);
                    push(&mut st, nb, slot, 2.0 / h2);
                }
                let (lo, hi) = if i == 0 {
                    (0.0, 0.5 * h)
                } else {
                    (PI - 0.5 * h, PI)
                };
                let c = wsin(0.5 * h) / (h * cell_volume(dim, lo, hi));
                laplacian.push(vec![(i, -c), (nb, c)]);
            } else {
                let cot = 1.0 / theta[i].tan();
                push(&mut st, i - 1, G1, -0.5 / h);
                push(&mut st, i + 1, G1, 0.5 / h);
                push(&mut st, i - 1, H11, 1.0 / h2);
                push(&mut st, i, H11, -2.0 / h2);
                push(&mut st, i + 1, H11, 1.0 / h2);
                push(&mut st, i - 1, H22, -0.5 * cot / h);
                push(&mut st, i + 1, H22, 0.5 * cot / h);
                let sp = wsin(theta[i] + 0.5 * h);
                let sm = wsin(theta[i] - 0.5 * h);
                let s = h * cell_volume(dim, theta[i] - 0.5 * h, theta[i] + 0.5 * h);
                laplacian.push(vec![(i - 1, sm / s), (i, -(sp + sm) / s), (i + 1, sp / s)]);
            }
            stencils.push(st);
        }
        Ok(SphereGrid(Arc::new(GridInner {
            backend: Backend::Axisym,
            dim,
            n_theta: m,
            n_phi: 1,
            phi: vec![0.0; m],
            theta,
            spacing: h,
            stencils,
            laplacian,
        })))
    }

    /// Full grid on `S²`: `θ_j = (j+½)π/n_θ`, `φ_m = 2πm/n_φ`. Stencils that
    /// reach past a pole read the node at the same colatitude on the opposite
    /// meridian.
    pub fn full_s2(n_theta: usize, n_phi: usize) -> Result<Self> {
        for got in [n_theta, n_phi] {
            if got < MIN_RESOLUTION {
                return Err(Error::ResolutionTooCoarse {
                    got,
                    min: MIN_RESOLUTION,
                });
            }
        }
        if !n_phi.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "n_phi must be even for the cross-pole reflection, got {n_phi}"
            )));
        }
        let dt = PI / n_theta as f64;
        let dp = 2.0 * PI / n_phi as f64;
        let idx = |j: isize, m: isize| -> usize {
            let (j, m) = if j < 0 {
                (0, m + n_phi as isize / 2)
            } else if j >= n_theta as isize {
                (n_theta as isize - 1, m + n_phi as isize / 2)
            } else {
                (j, m)
            };
            j as usize * n_phi + m.rem_euclid(n_phi as isize) as usize
        };
        let len = n_theta * n_phi;
        let mut theta = Vec::with_capacity(len);
        let mut phi = Vec::with_capacity(len);
        let mut stencils = Vec::with_capacity(len);
        let mut laplacian = Vec::with_capacity(len);
        for j in 0..n_theta as isize {
            let t = (j as f64 + 0.5) * dt;
            let (s, cot) = (t.sin(), 1.0 / t.tan());
            let half = |x: f64| {
                if x <= 0.0 || x >= PI - 1e-12 {
                    0.0
                } else {
                    x.sin()
                }
            };
            let (sp, sm) = (half(t + 0.5 * dt), half(t - 0.5 * dt));
            for m in 0..n_phi as isize {
                theta.push(t);
                phi.push(m as f64 * dp);
                let me = idx(j, m);
                let mut st = Stencil::new();
                // u_θ and u_φ
                let ut = [(idx(j + 1, m), 0.5 / dt), (idx(j - 1, m), -0.5 / dt)];
                let up = [(idx(j, m + 1), 0.5 / dp), (idx(j, m - 1), -0.5 / dp)];
                for &(node, w) in &ut {
                    push(&mut st, node, G1, w);
                    push(&mut st, node, H22, cot * w);
                }
                for &(node, w) in &up {
                    push(&mut st, node, G2, w / s);
                    push(&mut st, node, H12, -cot * w / s);
                }
                // u_θθ
                push(&mut st, idx(j + 1, m), H11, 1.0 / (dt * dt));
                push(&mut st, me, H11, -2.0 / (dt * dt));
                push(&mut st, idx(j - 1, m), H11, 1.0 / (dt * dt));
                // u_φφ / sin²θ
                let wpp = 1.0 / (dp * dp * s * s);
                push(&mut st, idx(j, m + 1), H22, wpp);
                push(&mut st, me, H22, -2.0 * wpp);
                push(&mut st, idx(j, m - 1), H22, wpp);
                // u_θφ / sinθ
                let wx = 0.25 / (dt * dp * s);
                push(&mut st, idx(j + 1, m + 1), H12, wx);
                push(&mut st, idx(j + 1, m - 1), H12, -wx);
                push(&mut st, idx(j - 1, m + 1), H12, -wx);
                push(&mut st, idx(j - 1, m - 1), H12, wx);
                stencils.push(st);

                let wt = 1.0 / (dt * ((t - 0.5 * dt).cos() - (t + 0.5 * dt).cos()));
                let mut lap: Vec<(usize, f64)> = Vec::new();
                let mut add = |node: usize, w: f64| {
                    if w == 0.0 {
                        return;
                    }
                    if let Some(e) = lap.iter_mut().find(|(n, _)| *n == node) {
                        e.1 += w;
                    } else {
                        lap.push((node, w));
                    }
                };
                add(idx(j + 1, m), sp * wt);
                add(idx(j - 1, m), sm * wt);
                add(me, -(sp + sm) * wt - 2.0 * wpp);
                add(idx(j, m + 1), wpp);
                add(idx(j, m - 1), wpp);
                laplacian.push(lap);
            }
        }
        Ok(SphereGrid(Arc::new(GridInner {
            backend: Backend::FullS2,
            dim: 2,
            n_theta,
            n_phi,
            theta,
            phi,
            spacing: dt.max(dp),
            stencils,
            laplacian,
        })))
    }

    /// Build from a backend and resolution list: `[M]` for axisym, `[n_θ]`
    /// (with `n_φ = 2n_θ`) or `[n_θ, n_φ]` for full grids.
    pub fn from_resolution(backend: Backend, dim: usize, res: &[usize]) -> Result<Self> {
        match (backend, res) {
            (Backend::Axisym, [m]) => Self::axisym(dim, *m),
            (Backend::FullS2, _) if dim != 2 => Err(Error::InvalidParameter(format!(
                "the full_s2 backend covers S² only; use axisym for n = {dim}"
            ))),
            (Backend::FullS2, [nt]) => Self::full_s2(*nt, 2 * nt),
            (Backend::FullS2, [nt, np]) => Self::full_s2(*nt, *np),
            _ => Err(Error::InvalidParameter(format!(
                "resolution {res:?} does not fit backend {backend}"
            ))),
        }
    }

    pub fn backend(&self) -> Backend {
        self.0.backend
    }

    /// Sphere dimension `n`.
    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn len(&self) -> usize {
        self.0.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.theta.is_empty()
    }

    /// `(n_θ, n_φ)`; `n_φ = 1` for axisym grids.
    pub fn resolution(&self) -> (usize, usize) {
        (self.0.n_theta, self.0.n_phi)
    }

    /// Grid spacing `h` used for discretization-error slack.
    pub fn spacing(&self) -> f64 {
        self.0.spacing
    }

    pub fn theta(&self) -> &[f64] {
        &self.0.theta
    }

    /// Longitudes (all zero for axisym grids).
    pub fn phi(&self) -> &[f64] {
        &self.0.phi
    }

    pub(crate) fn stencil(&self, node: usize) -> &[(usize, [f64; 5])] {
        &self.0.stencils[node]
    }

    /// Evaluate `f(θ, φ)` at every node.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        self.0
            .theta
            .iter()
            .zip(&self.0.phi)
            .map(|(&t, &p)| f(t, p))
            .collect()
    }

    fn check_len(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: u.len(),
            });
        }
        Ok(())
    }

    pub fn derivs_at(&self, u: &[f64], node: usize) -> FrameDerivs {
        let mut acc = [0.0; 5];
        for (j, w) in self.stencil(node) {
            for s in 0..5 {
                acc[s] += w[s] * u[*j];
            }
        }
        FrameDerivs {
            g: [acc[G1], acc[G2]],
            h: [acc[H11], acc[H12], acc[H22]],
        }
    }

    /// Frame gradient and covariant Hessian at every node.
    pub fn derivatives(&self, u: &[f64]) -> Result<Vec<FrameDerivs>> {
        self.check_len(u)?;
        if let Some(i) = u.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok((0..self.len())
            .into_par_iter()
            .map(|i| self.derivs_at(u, i))
            .collect())
    }

    /// Covariant Hessian as `(h₁₁, h₁₂, h₂₂)` per node.
    pub fn covariant_hessian(&self, u: &[f64]) -> Result<Vec<[f64; 3]>> {
        Ok(self.derivatives(u)?.into_iter().map(|d| d.h).collect())
    }

    /// Laplace–Beltrami operator in finite-volume flux form over colatitude
    /// cells.
    pub fn laplace_beltrami(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_len(u)?;
        Ok(self
            .0
            .laplacian
            .iter()
            .map(|row| row.iter().map(|(j, w)| w * u[*j]).sum())
            .collect())
    }

    /// Trace of a frame Hessian in dimension `n`.
    pub fn hessian_trace(&self, h: &[f64; 3]) -> f64 {
        h[0] + (self.dim() - 1) as f64 * h[2]
    }

    /// Integral of `f` over the sphere by the nodal quadrature, normalized
    /// so that the constant 1 integrates to 1.
    pub fn mean(&self, f: &[f64]) -> f64 {
        let w: Vec<f64> = match self.backend() {
            Backend::Axisym => {
                let m = self.len();
                self.theta()
                    .iter()
                    .enumerate()
                    .map(|(i, t)| {
                        let end = if i == 0 || i == m - 1 { 0.5 } else { 1.0 };
                        end * t.sin().powi(self.dim() as i32 - 1)
                    })
                    .collect()
            }
            Backend::FullS2 => self.theta().iter().map(|t| t.sin()).collect(),
        };
        let total: f64 = w.iter().sum();
        if total == 0.0 {
            return f.iter().sum::<f64>() / f.len() as f64;
        }
        w.iter().zip(f).map(|(a, b)| a * b).sum::<f64>() / total
    }
}

/// Eigen-decomposition of the frame matrix
/// `[[a₁₁, a₁₂], [a₁₂, a₂₂]] ⊕ a₂₂·I_{n−2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameEigen {
    /// Eigenvalues: the two of the leading block, then `a₂₂` repeated.
    pub values: Vec<f64>,
    cos: f64,
    sin: f64,
}

impl FrameEigen {
    pub fn new(n: usize, a11: f64, a12: f64, a22: f64) -> Self {
        let mean = 0.5 * (a11 + a22);
        let half = 0.5 * (a11 - a22);
        let r = half.hypot(a12);
        let angle = 0.5 * (2.0 * a12).atan2(a11 - a22);
        let mut values = Vec::with_capacity(n);
        values.push(mean + r);
        values.push(mean - r);
        values.extend(std::iter::repeat_n(a22, n - 2));
        FrameEigen {
            values,
            cos: angle.cos(),
            sin: angle.sin(),
        }
    }

    pub fn from_derivs(n: usize, u: f64, d: &FrameDerivs) -> Self {
        Self::new(n, d.h[0] + u, d.h[1], d.h[2] + u)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Sorted descending copy of the eigenvalues.
    pub fn sorted(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }

    /// Given `∂f/∂λ` aligned with [`Self::values`], return the derivatives of
    /// `f` with respect to `(a₁₁, a₁₂, a₂₂)` where `a₁₂` enters both
    /// off-diagonal slots and `a₂₂` every tangential diagonal slot, plus the
    /// trace `Σ ∂f/∂λ_i`.
    pub fn chain(&self, grad: &[f64]) -> ([f64; 3], f64) {
        let (c, s) = (self.cos, self.sin);
        let (g1, g2) = (grad[0], grad[1]);
        let d11 = g1 * c * c + g2 * s * s;
        let d12 = 2.0 * (g1 - g2) * c * s;
        let extra: f64 = grad[2..].iter().sum();
        let d22 = g1 * s * s + g2 * c * c + extra;
        ([d11, d12, d22], grad.iter().sum())
    }

    /// Dense `n×n` matrix with these eigenvalues in the frame.
    pub fn to_matrix(n: usize, a11: f64, a12: f64, a22: f64) -> nalgebra::DMatrix<f64> {
        let mut a = nalgebra::DMatrix::identity(n, n) * a22;
        a[(0, 0)] = a11;
        a[(0, 1)] = a12;
        a[(1, 0)] = a12;
        a
    }
}

/// Discretized `u` with derived quantities at every node.
#[derive(Debug, Clone)]
pub struct SolutionField {
    grid: SphereGrid,
    u: Vec<f64>,
    derivs: Vec<FrameDerivs>,
    spectrum: Vec<Vec<f64>>,
    margin: Vec<f64>,
    residual: Option<Vec<f64>>,
}

/// Compute gradient, Hessian, spectrum of `a` (sorted descending) and cone
/// margin `min_{j≤k} σ_j(Λ)` at every node.
pub fn spectrum_field(
    u: &[f64],
    grid: &SphereGrid,
    op: &QuotientOperator,
) -> Result<SolutionField> {
    if op.n() != grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: grid.dim(),
            got: op.n(),
        });
    }
    if let Some(node) = u.iter().position(|&x| !(x > 0.0)) {
        return Err(Error::NonPositive {
            node,
            value: u[node],
        });
    }
    let derivs = grid.derivatives(u)?;
    let n = grid.dim();
    let (spectrum, margin): (Vec<Vec<f64>>, Vec<f64>) = derivs
        .par_iter()
        .zip(u.par_iter())
        .map(|(d, &ui)| {
            let e = FrameEigen::from_derivs(n, ui, d);
            let m = op.margin(&e.values).expect("length matches n");
            (e.sorted(), m)
        })
        .unzip();
    Ok(SolutionField {
        grid: grid.clone(),
        u: u.to_vec(),
        derivs,
        spectrum,
        margin,
        residual: None,
    })
}

impl SolutionField {
    pub fn grid(&self) -> &SphereGrid {
        &self.grid
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn derivs(&self) -> &[FrameDerivs] {
        &self.derivs
    }

    /// Sorted (descending) eigenvalues of `a` per node.
    pub fn spectrum(&self) -> &[Vec<f64>] {
        &self.spectrum
    }

    pub fn margin(&self) -> &[f64] {
        &self.margin
    }

    pub fn residual(&self) -> Option<&[f64]> {
        self.residual.as_deref()
    }

    pub fn set_residual(&mut self, r: Vec<f64>) {
        self.residual = Some(r);
    }

    pub fn min_margin(&self) -> f64 {
        self.margin.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Smallest eigenvalue of `a` over all nodes.
    pub fn min_eig(&self) -> f64 {
        self.spectrum
            .iter()
            .filter_map(|s| s.last().copied())
            .fold(f64::INFINITY, f64::min)
    }

    /// Whether `u > 0` and the spectrum lies in the `(𝒫,k)`-cone at every node.
    pub fn is_admissible(&self) -> bool {
        self.min_margin() > 0.0
    }

    /// `max |∇u|/u` over nodes.
    pub fn max_grad_ratio(&self) -> f64 {
        self.derivs
            .iter()
            .zip(&self.u)
            .map(|(d, u)| d.grad_sq().sqrt() / u)
            .fold(0.0, f64::max)
    }

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let n = self.grid.dim();
        let mut header = vec!["theta".to_string(), "phi".to_string(), "u".to_string()];
        header.extend((1..=n).map(|i| format!("lambda_{i}")));
        header.push("margin".into());
        header.push("residual".into());
        w.write_record(&header)?;
        for i in 0..self.u.len() {
            let mut row = vec![
                format!("{}", self.grid.theta()[i]),
                format!("{}", self.grid.phi()[i]),
                format!("{}", self.u[i]),
            ];
            row.extend(self.spectrum[i].iter().map(|x| format!("{x}")));
            row.push(format!("{}", self.margin[i]));
            row.push(match &self.residual {
                Some(r) => format!("{}", r[i]),
                None => String::new(),
            });
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}
