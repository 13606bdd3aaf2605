//! Dense complex linear algebra on small matrices.
//!
//! Thin layer over `nalgebra`: Gaussian draws, a Hermitian eigendecomposition
//! with eigenvalues in descending order, and QR orthonormalization.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{OiaError, Result};
use crate::grassmann::GeneratorMatrix;

pub type ComplexMatrix = DMatrix<Complex64>;

/// Maximum tolerated `|A - A^H|` entry, relative to `max(1, max |A_ij|)`.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Smallest singular value accepted by [`orthonormal_basis`].
pub const RANK_TOL: f64 = 1e-12;

/// Eigen-decomposition of a Hermitian matrix, eigenvalues non-increasing.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub eigenvalues: Vec<f64>,
    /// Column `n` pairs with `eigenvalues[n]`.
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Eigenvectors `start..end` (0-based, descending-eigenvalue order) as columns.
    pub fn vectors(&self, start: usize, end: usize) -> ComplexMatrix {
        self.eigenvectors.columns(start, end - start).into_owned()
    }

    /// `V diag(λ) V^H`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.dim();
        let lambda = ComplexMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(self.eigenvalues[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        &self.eigenvectors * lambda * self.eigenvectors.adjoint()
    }
}

/// `rows x cols` matrix of i.i.d. CN(0, 1) entries, drawn in row-major order.
pub fn random_gaussian_matrix<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    rng: &mut R,
) -> ComplexMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let entries: Vec<Complex64> = (0..rows * cols)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(scale * re, scale * im)
        })
        .collect();
    ComplexMatrix::from_row_slice(rows, cols, &entries)
}

pub fn max_abs_entry(a: &ComplexMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn max_asymmetry(a: &ComplexMatrix) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn hermitian_eigen(a: &ComplexMatrix) -> Result<HermitianEigen> {
    if !a.is_square() {
        return Err(OiaError::ShapeMismatch(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let asym = max_asymmetry(a);
    if asym > HERMITIAN_TOL * max_abs_entry(a).max(1.0) {
        return Err(OiaError::NotHermitian {
            max_asymmetry: asym,
        });
    }
    Ok(eigen_sorted(a))
}

/// Eigendecomposition of the Hermitian part of `a`. Callers guarantee `a` is
/// Hermitian up to rounding (Gram sums and projections of them).
pub(crate) fn eigen_sorted(a: &ComplexMatrix) -> HermitianEigen {
    let sym = (a + a.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(sym);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    // stable: ties keep solver order
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    debug_assert!(eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    HermitianEigen {
        eigenvalues,
        eigenvectors,
    }
}

/// Eigenvalues of a Hermitian PSD matrix, descending, clamped at zero.
pub(crate) fn psd_eigenvalues(a: &ComplexMatrix) -> Vec<f64> {
    let sym = (a + a.adjoint()).scale(0.5);
    let mut values: Vec<f64> = sym
        .symmetric_eigenvalues()
        .iter()
        .map(|&v| v.max(0.0))
        .collect();
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

/// Orthonormal basis of the column span of `h` (thin Householder QR).
pub fn orthonormal_basis(h: &ComplexMatrix) -> Result<GeneratorMatrix> {
    if h.nrows() < h.ncols() {
        return Err(OiaError::ShapeMismatch(format!(
            "orthonormal basis needs rows >= cols, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    let qr = h.clone().qr();
    let smallest = qr.r().singular_values().min();
    if smallest.is_nan() || smallest <= RANK_TOL {
        return Err(OiaError::RankDeficient {
            smallest_singular_value: smallest,
        });
    }
    Ok(GeneratorMatrix::from_orthonormal_unchecked(qr.q()))
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}
