//! Subspace geometry on the complex Grassmann manifold.
//!
//! Subspaces are carried around as [`GeneratorMatrix`] values (tall matrices
//! with orthonormal columns). Every quantity computed here depends only on
//! the spanned subspace, never on the particular generator.

use rayon::prelude::*;
use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{OiaError, Result};
use crate::linalg::{
    eigen_sorted, identity, orthonormal_basis, random_gaussian_matrix, ComplexMatrix,
};
use crate::rng;
use crate::stats::McEstimate;

/// Tolerance on `G^H G = I` accepted by [`GeneratorMatrix::new`].
pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// `N_R x M` matrix with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix(ComplexMatrix);

impl GeneratorMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if matrix.nrows() < matrix.ncols() || matrix.ncols() == 0 {
            return Err(OiaError::ShapeMismatch(format!(
                "generator must be tall, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let deviation = (matrix.adjoint() * &matrix - identity(matrix.ncols())).norm();
        if deviation > ORTHONORMAL_TOL {
            return Err(OiaError::NotOrthonormal { deviation });
        }
        Ok(Self(matrix))
    }

    pub(crate) fn from_orthonormal_unchecked(matrix: ComplexMatrix) -> Self {
        Self(matrix)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    /// Ambient dimension `N_R`.
    pub fn ambient_dim(&self) -> usize {
        self.0.nrows()
    }

    /// Subspace dimension `M`.
    pub fn dim(&self) -> usize {
        self.0.ncols()
    }

    /// Orthogonal projector `G G^H`.
    pub fn projector(&self) -> ComplexMatrix {
        &self.0 * self.0.adjoint()
    }

    /// Left-multiply by a unitary matrix. The result spans the rotated subspace.
    pub fn rotated(&self, unitary: &ComplexMatrix) -> Self {
        Self(unitary * &self.0)
    }

    /// Generator of the orthogonal complement, `N_R x (N_R - M)`.
    pub fn complement(&self) -> GeneratorMatrix {
        let n = self.ambient_dim();
        let m = self.dim();
        let eig = eigen_sorted(&(identity(n) - self.projector()));
        Self(eig.vectors(0, n - m))
    }
}

/// Principal angles `θ_1 <= ... <= θ_M` in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalAngles(pub Vec<f64>);

impl PrincipalAngles {
    pub fn angles(&self) -> &[f64] {
        &self.0
    }

    /// `cos θ_m`, descending.
    pub fn cosines(&self) -> Vec<f64> {
        self.0.iter().map(|t| t.cos()).collect()
    }

    /// `Σ sin² θ_m`.
    pub fn chordal_distance_sq(&self) -> f64 {
        self.0.iter().map(|t| t.sin().powi(2)).sum()
    }
}

fn check_same_shape(a: &GeneratorMatrix, b: &GeneratorMatrix) -> Result<()> {
    if a.0.shape() != b.0.shape() {
        return Err(OiaError::ShapeMismatch(format!(
            "generators differ in shape: {:?} vs {:?}",
            a.0.shape(),
            b.0.shape()
        )));
    }
    Ok(())
}

fn check_half_dim(a: &GeneratorMatrix) -> Result<()> {
    if a.ambient_dim() != 2 * a.dim() {
        return Err(OiaError::ShapeMismatch(format!(
            "expected N_R = 2M, got N_R = {} with M = {}",
            a.ambient_dim(),
            a.dim()
        )));
    }
    Ok(())
}

/// Principal angles from the singular values of `A^H B`.
pub fn principal_angles(a: &GeneratorMatrix, b: &GeneratorMatrix) -> Result<PrincipalAngles> {
    check_same_shape(a, b)?;
    let cross = a.0.adjoint() * &b.0;
    let mut mu: Vec<f64> = cross.singular_values().iter().copied().collect();
    mu.sort_by(|x, y| y.total_cmp(x));
    Ok(PrincipalAngles(
        mu.into_iter().map(|s| s.clamp(0.0, 1.0).acos()).collect(),
    ))
}

/// Squared chordal distance `M - tr(A^H B B^H A)`, clamped to `[0, M]`.
pub fn chordal_distance_sq(a: &GeneratorMatrix, b: &GeneratorMatrix) -> Result<f64> {
    check_same_shape(a, b)?;
    Ok(chordal_unchecked(a, b))
}

pub(crate) fn chordal_unchecked(a: &GeneratorMatrix, b: &GeneratorMatrix) -> f64 {
    let m = a.dim() as f64;
    // tr(A^H B B^H A) = ||A^H B||_F^2
    let overlap = (a.0.adjoint() * &b.0).norm_squared();
    (m - overlap).clamp(0.0, m)
}

/// Eigenvalues of `A A^H + B B^H`, descending (length `2M`).
///
/// These are `1 + cos θ_m` followed by `1 - cos θ_m` in reverse order: the
/// nonzero spectrum of `[A B][A B]^H` equals that of `[[I, A^H B], [B^H A, I]]`.
pub fn pair_gram_spectrum(a: &GeneratorMatrix, b: &GeneratorMatrix) -> Result<Vec<f64>> {
    check_same_shape(a, b)?;
    check_half_dim(a)?;
    let sum = a.projector() + b.projector();
    Ok(eigen_sorted(&sum).eigenvalues)
}

/// Sum of the `M` smallest eigenvalues of `A A^H + B B^H`, i.e. `Σ (1 - cos θ_m)`.
///
/// Never exceeds the squared chordal distance `Σ (1 - cos² θ_m)`; the two agree
/// when every principal angle is `0` or `π/2`.
pub fn min_tail_eigensum(a: &GeneratorMatrix, b: &GeneratorMatrix) -> Result<f64> {
    let spectrum = pair_gram_spectrum(a, b)?;
    let m = a.dim();
    Ok(spectrum[m..].iter().map(|v| v.max(0.0)).sum())
}

/// Unitary `R = [A, A⊥][H, H⊥]^H`, which maps `span(H)` onto `span(A)` with `R H = A`.
pub fn rotation_onto(h: &GeneratorMatrix, a: &GeneratorMatrix) -> Result<ComplexMatrix> {
    check_same_shape(h, a)?;
    check_half_dim(h)?;
    let full = |g: &GeneratorMatrix| {
        let perp = g.complement();
        let mut out = ComplexMatrix::zeros(g.ambient_dim(), g.ambient_dim());
        out.columns_mut(0, g.dim()).copy_from(&g.0);
        out.columns_mut(g.dim(), perp.dim()).copy_from(&perp.0);
        out
    };
    Ok(full(a) * full(h).adjoint())
}

/// Parameters of the random-codebook distortion bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistortionBoundParams {
    pub m: usize,
    pub k: usize,
    pub a: f64,
}

impl DistortionBoundParams {
    pub fn new(m: usize, k: usize, a: f64) -> Self {
        Self { m, k, a }
    }
}

/// `ln η` with `η = (1/Γ(M²+1)) Π_{i=1..M} Γ(2M-i+1)/Γ(M-i+1)`.
pub fn ln_eta(m: usize) -> f64 {
    let m_f = m as f64;
    let product: f64 = (1..=m)
        .map(|i| {
            let i = i as f64;
            ln_gamma(2.0 * m_f - i + 1.0) - ln_gamma(m_f - i + 1.0)
        })
        .sum();
    product - ln_gamma(m_f * m_f + 1.0)
}

/// Upper bound `D` on the mean minimum squared chordal distance between a
/// fixed subspace of `G(2M, M)` and `K` isotropic random subspaces.
pub fn quantization_bound(params: DistortionBoundParams) -> Result<f64> {
    let DistortionBoundParams { m, k, a } = params;
    if m == 0 || k == 0 {
        return Err(OiaError::InvalidParams(format!(
            "M and K must be at least 1 (M = {m}, K = {k})"
        )));
    }
    if !(a > 0.0 && a < 1.0) {
        return Err(OiaError::InvalidParams(format!(
            "a = {a} is outside (0, 1)"
        )));
    }
    let ln_eta_k = ln_eta(m) + (k as f64).ln();
    if ln_eta_k < 0.0 {
        return Err(OiaError::InvalidParams(format!(
            "eta*K = {:e} < 1 for M = {m}, K = {k}",
            ln_eta_k.exp()
        )));
    }
    let mm = (m * m) as f64;
    let main = gamma(1.0 / mm) / mm * (-ln_eta_k / mm).exp();
    let tail = m as f64 * (-((1.0 - a) * ln_eta_k).exp()).exp();
    Ok(main + tail)
}

/// Monte-Carlo estimate of `E[min_{k<=K} d_c²(H̃_{k,2}, H̃_{k,3})]` for i.i.d.
/// Gaussian `2M x M` interferer pairs.
///
/// Trial `t` uses the stream `(seed, t)` and draws its `K` pairs in order, so
/// for a fixed seed the per-trial minimum is non-increasing in `K`.
pub fn min_chordal_statistic(m: usize, k: usize, trials: usize, seed: u64) -> Result<McEstimate> {
    if m == 0 || k == 0 || trials == 0 {
        return Err(OiaError::InvalidParams(format!(
            "M, K and trials must be at least 1 (M = {m}, K = {k}, trials = {trials})"
        )));
    }
    let n_r = 2 * m;
    let samples: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::stream(seed, &[t as u64]);
            let mut best = f64::INFINITY;
            let mut drawn = 0;
            while drawn < k {
                let h2 = random_gaussian_matrix(n_r, m, &mut rng);
                let h3 = random_gaussian_matrix(n_r, m, &mut rng);
                // rank-deficient draws have probability zero; skip and redraw
                if let (Ok(a), Ok(b)) = (orthonormal_basis(&h2), orthonormal_basis(&h3)) {
                    best = best.min(chordal_unchecked(&a, &b));
                    drawn += 1;
                }
            }
            best
        })
        .collect();
    Ok(McEstimate::from_samples(&samples))
}
