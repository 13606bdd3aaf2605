//! System model: configuration, channel draws and rate formulas.
//!
//! Noise covariance is the identity, so `P` is the SNR. Each transmitter splits
//! `P` equally over its `M` streams.

use std::f64::consts::LN_2;

use nalgebra::Cholesky;
use rand::Rng;

use crate::error::{OiaError, Result};
use crate::linalg::{identity, psd_eigenvalues, random_gaussian_matrix, ComplexMatrix};

/// Tolerance on `F F^H = I` accepted by [`Postprocessor::new`].
pub const SEMI_UNITARY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Streams per transmitter (= transmit antennas).
    pub m: usize,
    /// Receive antennas, always `2M`.
    pub n_r: usize,
    /// Users per group.
    pub k: usize,
    /// Transmit power, linear, relative to unit noise power.
    pub power: f64,
    pub seed: u64,
}

impl SystemConfig {
    pub fn new(m: usize, n_r: usize, k: usize, power: f64, seed: u64) -> Result<Self> {
        if m == 0 {
            return Err(OiaError::InvalidConfig("M must be at least 1".into()));
        }
        if n_r != 2 * m {
            return Err(OiaError::InvalidConfig(format!(
                "N_R must equal 2M (M = {m}, N_R = {n_r})"
            )));
        }
        if k == 0 {
            return Err(OiaError::InvalidConfig("K must be at least 1".into()));
        }
        if !(power > 0.0 && power.is_finite()) {
            return Err(OiaError::InvalidConfig(format!(
                "power must be positive and finite, got {power}"
            )));
        }
        Ok(Self {
            m,
            n_r,
            k,
            power,
            seed,
        })
    }

    /// Configuration with `N_R = 2M`.
    pub fn with_streams(m: usize, k: usize, power: f64, seed: u64) -> Result<Self> {
        Self::new(m, 2 * m, k, power, seed)
    }
}

/// Channels seen by one user of the first group: the desired link from
/// transmitter 1 and the interfering links from transmitters 2 and 3.
#[derive(Debug, Clone, PartialEq)]
pub struct UserChannels {
    h1: ComplexMatrix,
    h2: ComplexMatrix,
    h3: ComplexMatrix,
}

impl UserChannels {
    pub fn new(h1: ComplexMatrix, h2: ComplexMatrix, h3: ComplexMatrix) -> Result<Self> {
        let shape = h1.shape();
        if h2.shape() != shape || h3.shape() != shape {
            return Err(OiaError::ShapeMismatch(format!(
                "user channels differ in shape: {:?}, {:?}, {:?}",
                shape,
                h2.shape(),
                h3.shape()
            )));
        }
        if shape.0 < shape.1 || shape.1 == 0 {
            return Err(OiaError::ShapeMismatch(format!(
                "channel matrices must be N_R x M with N_R >= M >= 1, got {shape:?}"
            )));
        }
        if [&h1, &h2, &h3]
            .iter()
            .any(|h| h.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())))
        {
            return Err(OiaError::InvalidParams("non-finite channel entry".into()));
        }
        Ok(Self { h1, h2, h3 })
    }

    pub fn draw<R: Rng + ?Sized>(n_r: usize, m: usize, rng: &mut R) -> Self {
        let h1 = random_gaussian_matrix(n_r, m, rng);
        let h2 = random_gaussian_matrix(n_r, m, rng);
        let h3 = random_gaussian_matrix(n_r, m, rng);
        Self { h1, h2, h3 }
    }

    pub fn h1(&self) -> &ComplexMatrix {
        &self.h1
    }

    pub fn h2(&self) -> &ComplexMatrix {
        &self.h2
    }

    pub fn h3(&self) -> &ComplexMatrix {
        &self.h3
    }

    pub fn streams(&self) -> usize {
        self.h1.ncols()
    }

    pub fn receive_dim(&self) -> usize {
        self.h1.nrows()
    }

    /// Same user with both interferers silent.
    pub fn without_interference(&self) -> Self {
        let zero = ComplexMatrix::zeros(self.h1.nrows(), self.h1.ncols());
        Self {
            h1: self.h1.clone(),
            h2: zero.clone(),
            h3: zero,
        }
    }

    /// Same user with transmitter 3 silent.
    pub fn without_interferer3(&self) -> Self {
        Self {
            h1: self.h1.clone(),
            h2: self.h2.clone(),
            h3: ComplexMatrix::zeros(self.h1.nrows(), self.h1.ncols()),
        }
    }
}

/// Semi-unitary `M x N_R` receive projection.
#[derive(Debug, Clone, PartialEq)]
pub struct Postprocessor(ComplexMatrix);

impl Postprocessor {
    pub fn new(f: ComplexMatrix) -> Result<Self> {
        if f.nrows() > f.ncols() || f.nrows() == 0 {
            return Err(OiaError::ShapeMismatch(format!(
                "postprocessor must be wide, got {}x{}",
                f.nrows(),
                f.ncols()
            )));
        }
        let deviation = (&f * f.adjoint() - identity(f.nrows())).norm();
        if deviation > SEMI_UNITARY_TOL {
            return Err(OiaError::NotOrthonormal { deviation });
        }
        Ok(Self(f))
    }

    /// `F = V^H` for orthonormal columns `V`.
    pub(crate) fn from_orthonormal_columns(v: &ComplexMatrix) -> Self {
        Self(v.adjoint())
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn streams(&self) -> usize {
        self.0.nrows()
    }
}

/// `K` independent users for one group.
pub fn draw_group<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> Vec<UserChannels> {
    (0..config.k)
        .map(|_| UserChannels::draw(config.n_r, config.m, rng))
        .collect()
}

fn gram(h: &ComplexMatrix) -> ComplexMatrix {
    h * h.adjoint()
}

/// `B_k = H_2 H_2^H + H_3 H_3^H`.
pub fn interference_gram(user: &UserChannels) -> ComplexMatrix {
    gram(&user.h2) + gram(&user.h3)
}

fn projected_gram(f: &Postprocessor, h: &ComplexMatrix) -> ComplexMatrix {
    gram(&(&f.0 * h))
}

/// `log2 det(I + scale * A)` for Hermitian PSD `A`.
pub(crate) fn log2_det_i_plus(scale: f64, psd: &ComplexMatrix) -> f64 {
    psd_eigenvalues(psd)
        .iter()
        .map(|l| (scale * l).ln_1p())
        .sum::<f64>()
        / LN_2
}

/// `log2 det(I + S (I + Q)^{-1})` for Hermitian PSD `S`, `Q`, evaluated as
/// `Σ log2(1 + μ)` over the eigenvalues of `L^{-1} S L^{-H}`, `L L^H = I + Q`.
fn log2_det_whitened(signal: &ComplexMatrix, interference: &ComplexMatrix) -> f64 {
    let n = signal.nrows();
    let chol = Cholesky::new(identity(n) + interference).expect("I + PSD is positive definite");
    let l = chol.l();
    let half = l
        .solve_lower_triangular(signal)
        .expect("Cholesky factor is nonsingular");
    let whitened = l
        .solve_lower_triangular(&half.adjoint())
        .expect("Cholesky factor is nonsingular");
    log2_det_i_plus(1.0, &whitened)
}

fn per_stream(power: f64, user: &UserChannels) -> f64 {
    power / user.streams() as f64
}

/// Rate at the user after projection by `F`, with both interferers treated as noise.
pub fn achievable_rate(f: &Postprocessor, user: &UserChannels, power: f64) -> f64 {
    let s = per_stream(power, user);
    let signal = projected_gram(f, &user.h1).scale(s);
    let interference = (projected_gram(f, &user.h2) + projected_gram(f, &user.h3)).scale(s);
    log2_det_whitened(&signal, &interference).max(0.0)
}

/// `log2 det(I + (P/M) Σ_{i=1..3} F H_i H_i^H F^H)`.
pub fn rate_plus(f: &Postprocessor, user: &UserChannels, power: f64) -> f64 {
    let total =
        projected_gram(f, &user.h1) + projected_gram(f, &user.h2) + projected_gram(f, &user.h3);
    log2_det_i_plus(per_stream(power, user), &total)
}

/// Rate loss: `log2 det(I + (P/M) Σ_{i=2,3} F H_i H_i^H F^H)`.
pub fn rate_minus(f: &Postprocessor, user: &UserChannels, power: f64) -> f64 {
    let total = projected_gram(f, &user.h2) + projected_gram(f, &user.h3);
    log2_det_i_plus(per_stream(power, user), &total)
}

/// Joint-decoding capacity with all `N_R` antennas and no projection.
pub fn capacity_joint(user: &UserChannels, power: f64) -> f64 {
    let s = per_stream(power, user);
    let signal = gram(&user.h1).scale(s);
    let interference = interference_gram(user).scale(s);
    log2_det_whitened(&signal, &interference).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitian_eigen, orthonormal_basis};
    use crate::rng::stream;
    use num_complex::Complex64;

    fn random_postprocessor(m: usize, n_r: usize, rng: &mut impl Rng) -> Postprocessor {
        let g = orthonormal_basis(&random_gaussian_matrix(n_r, m, rng)).unwrap();
        Postprocessor::from_orthonormal_columns(g.matrix())
    }

    fn zero(n_r: usize, m: usize) -> ComplexMatrix {
        ComplexMatrix::zeros(n_r, m)
    }

    #[test]
    fn config_validation() {
        assert!(SystemConfig::new(2, 4, 10, 10.0, 0).is_ok());
        for bad in [
            SystemConfig::new(2, 3, 10, 10.0, 0),
            SystemConfig::new(0, 0, 10, 10.0, 0),
            SystemConfig::new(1, 2, 0, 10.0, 0),
            SystemConfig::new(1, 2, 1, 0.0, 0),
            SystemConfig::new(1, 2, 1, f64::NAN, 0),
        ] {
            assert!(matches!(bad, Err(OiaError::InvalidConfig(_))));
        }
    }

    #[test]
    fn user_shape_validation() {
        let ok = UserChannels::new(zero(4, 2), zero(4, 2), zero(4, 2));
        assert!(ok.is_ok());
        let bad = UserChannels::new(zero(4, 2), zero(4, 1), zero(4, 2));
        assert!(matches!(bad, Err(OiaError::ShapeMismatch(_))));
    }

    #[test]
    fn group_draws() {
        let cfg = SystemConfig::with_streams(2, 1, 10.0, 3).unwrap();
        assert_eq!(draw_group(&cfg, &mut stream(3, &[])).len(), 1);
        let cfg = SystemConfig::with_streams(2, 5, 10.0, 3).unwrap();
        let a = draw_group(&cfg, &mut stream(3, &[]));
        let b = draw_group(&cfg, &mut stream(3, &[]));
        assert_eq!(a, b);
        assert!(a.iter().all(|u| u.h1().shape() == (4, 2)));
    }

    #[test]
    fn desired_channel_energy() {
        let cfg = SystemConfig::with_streams(2, 1, 1.0, 0).unwrap();
        let mut rng = stream(4, &[]);
        let n = 10_000;
        let energy: f64 = (0..n)
            .map(|_| draw_group(&cfg, &mut rng)[0].h1().norm_squared())
            .sum::<f64>()
            / n as f64;
        assert!((energy - 8.0).abs() < 0.15, "{energy}");
    }

    #[test]
    fn interference_gram_cases() {
        let mut rng = stream(5, &[]);
        let h1 = random_gaussian_matrix(4, 2, &mut rng);
        let h2 = random_gaussian_matrix(4, 2, &mut rng);
        let silent = UserChannels::new(h1.clone(), zero(4, 2), zero(4, 2)).unwrap();
        assert_eq!(interference_gram(&silent).norm(), 0.0);
        let one = UserChannels::new(h1, h2.clone(), zero(4, 2)).unwrap();
        let b = interference_gram(&one);
        assert!((&b - &h2 * h2.adjoint()).norm() < 1e-12);
        let rank = hermitian_eigen(&b)
            .unwrap()
            .eigenvalues
            .iter()
            .filter(|&&v| v > 1e-9)
            .count();
        assert_eq!(rank, 2);
        let user = UserChannels::draw(4, 2, &mut rng);
        let eig = hermitian_eigen(&interference_gram(&user)).unwrap();
        assert!(eig.eigenvalues.iter().all(|&v| v > 1e-9));
    }

    #[test]
    fn rate_vanishes_at_low_power() {
        let mut rng = stream(6, &[]);
        let user = UserChannels::draw(4, 2, &mut rng);
        let f = random_postprocessor(2, 4, &mut rng);
        assert!(achievable_rate(&f, &user, 1e-9) < 1e-6);
        assert!(capacity_joint(&user, 1e-9) < 1e-6);
    }

    #[test]
    fn aligned_single_stream_rate() {
        let mut rng = stream(7, &[]);
        let h1 = random_gaussian_matrix(2, 1, &mut rng);
        let user = UserChannels::new(h1.clone(), zero(2, 1), zero(2, 1)).unwrap();
        let f = Postprocessor::new(h1.adjoint().unscale(h1.norm())).unwrap();
        let p = 10.0;
        let want = (1.0 + p * h1.norm_squared()).log2();
        assert!((achievable_rate(&f, &user, p) - want).abs() < 1e-12);
        assert!((capacity_joint(&user, p) - want).abs() < 1e-12);
        assert_eq!(rate_minus(&f, &user, p), 0.0);
    }

    #[test]
    fn zero_channels_give_zero_rates() {
        let f = Postprocessor::new(identity(4).rows(0, 2).into_owned()).unwrap();
        let user = UserChannels::new(zero(4, 2), zero(4, 2), zero(4, 2)).unwrap();
        assert_eq!(rate_plus(&f, &user, 100.0), 0.0);
        assert_eq!(rate_minus(&f, &user, 100.0), 0.0);
        assert_eq!(capacity_joint(&user, 100.0), 0.0);
    }

    #[test]
    fn rate_split_identity() {
        let mut rng = stream(8, &[]);
        for m in 1..=3 {
            for &p in &[0.1, 1.0, 10.0, 1e3, 1e5] {
                for _ in 0..20 {
                    let user = UserChannels::draw(2 * m, m, &mut rng);
                    let f = random_postprocessor(m, 2 * m, &mut rng);
                    let r = achievable_rate(&f, &user, p);
                    let split = rate_plus(&f, &user, p) - rate_minus(&f, &user, p);
                    assert!((r - split).abs() < 1e-9, "M={m} P={p}: {r} vs {split}");
                    assert!(r.is_finite() && r >= 0.0);
                }
            }
        }
    }

    #[test]
    fn capacity_dominates_projection() {
        let mut rng = stream(9, &[]);
        for m in 1..=2 {
            for _ in 0..10 {
                let user = UserChannels::draw(2 * m, m, &mut rng);
                let p = 100.0;
                let c = capacity_joint(&user, p);
                for _ in 0..50 {
                    let f = random_postprocessor(m, 2 * m, &mut rng);
                    assert!(c - achievable_rate(&f, &user, p) >= -1e-9);
                }
            }
        }
    }

    #[test]
    fn rates_grow_with_power() {
        let mut rng = stream(10, &[]);
        let user = UserChannels::draw(4, 2, &mut rng);
        let f = random_postprocessor(2, 4, &mut rng);
        let grid: Vec<f64> = (0..=12).map(|i| 10f64.powf(i as f64 / 2.0 - 1.0)).collect();
        for w in grid.windows(2) {
            assert!(achievable_rate(&f, &user, w[1]) >= achievable_rate(&f, &user, w[0]) - 1e-12);
            assert!(capacity_joint(&user, w[1]) >= capacity_joint(&user, w[0]) - 1e-12);
        }
    }

    #[test]
    fn postprocessor_validation() {
        let f = ComplexMatrix::from_element(1, 2, Complex64::new(1.0, 0.0));
        assert!(matches!(
            Postprocessor::new(f),
            Err(OiaError::NotOrthonormal { .. })
        ));
        assert!(matches!(
            Postprocessor::new(zero(3, 2)),
            Err(OiaError::ShapeMismatch(_))
        ));
    }
}
