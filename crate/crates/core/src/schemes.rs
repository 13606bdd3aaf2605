//! User-selection schemes for transmitter 1.
//!
//! Every user computes one scalar and feeds it back; the transmitter picks the
//! extremal user. The outcome records the realized rate of transmitter 1 with
//! the selected user, including the duty cycle of the time-division baselines.

use std::fmt;
use std::str::FromStr;

use crate::channel::{
    achievable_rate, capacity_joint, interference_gram, Postprocessor, UserChannels,
};
use crate::error::{OiaError, Result};
use crate::grassmann::chordal_unchecked;
use crate::linalg::{eigen_sorted, orthonormal_basis, ComplexMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeId {
    /// Rate-loss minimization: smallest residual interference after projection.
    Oia1,
    /// Chordal-distance minimization between the two interfering subspaces.
    Oia2,
    MaxSnr,
    /// One transmitter active per slot.
    Tdm1,
    /// Two transmitters active per slot.
    Tdm2,
    /// Joint-decoding capacity maximization.
    Opt,
}

impl SchemeId {
    pub const ALL: [SchemeId; 6] = [
        SchemeId::Oia1,
        SchemeId::Oia2,
        SchemeId::MaxSnr,
        SchemeId::Tdm1,
        SchemeId::Tdm2,
        SchemeId::Opt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeId::Oia1 => "OIA1",
            SchemeId::Oia2 => "OIA2",
            SchemeId::MaxSnr => "MAX_SNR",
            SchemeId::Tdm1 => "TDM1",
            SchemeId::Tdm2 => "TDM2",
            SchemeId::Opt => "OPT",
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeId {
    type Err = OiaError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_uppercase().replace('-', "_");
        SchemeId::ALL
            .into_iter()
            .find(|id| id.name() == key || (key == "MAXSNR" && *id == SchemeId::MaxSnr))
            .ok_or_else(|| OiaError::InvalidConfig(format!("unknown scheme '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Min,
    Max,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeOutcome {
    /// 0-based index of the selected user.
    pub selected: usize,
    /// Feedback value of the selected user.
    pub feedback: f64,
    /// `None` for OPT, which decodes jointly.
    pub postprocessor: Option<Postprocessor>,
    /// Transmitter-1 rate in bits per channel use, duty cycle applied.
    pub rate: f64,
}

fn tail_product(eigenvalues: &[f64], m: usize, scale: f64) -> f64 {
    eigenvalues[m..]
        .iter()
        .map(|&l| 1.0 + scale * l.max(0.0))
        .product()
}

/// Projection onto the `M` weakest directions of `gram`, with the product
/// `Π (1 + scale λ_m)` over those directions.
fn weakest_directions(gram: &ComplexMatrix, m: usize, scale: f64) -> (f64, Postprocessor) {
    let eig = eigen_sorted(gram);
    let feedback = tail_product(&eig.eigenvalues, m, scale);
    let f = Postprocessor::from_orthonormal_columns(&eig.vectors(m, eig.dim()));
    (feedback, f)
}

/// OIA1 feedback `Π_{m=M+1}^{2M} (1 + (P/M) λ_m(B_k))` and the projection onto
/// the eigenvectors of those `M` smallest eigenvalues, which minimizes the
/// rate loss over all semi-unitary projections.
pub fn oia1_feedback(user: &UserChannels, power: f64) -> (f64, Postprocessor) {
    let m = user.streams();
    weakest_directions(&interference_gram(user), m, power / m as f64)
}

/// OIA2 feedback: squared chordal distance between the two interfering subspaces.
pub fn oia2_feedback(user: &UserChannels) -> Result<f64> {
    let a = orthonormal_basis(user.h2())?;
    let b = orthonormal_basis(user.h3())?;
    Ok(chordal_unchecked(&a, &b))
}

/// MAX-SNR feedback `Π_{m=1}^{M} (1 + (P/M) λ_m(H_1 H_1^H))` with the matched
/// projection onto the top-`M` eigenvectors.
pub fn maxsnr_feedback(user: &UserChannels, power: f64) -> (f64, Postprocessor) {
    let m = user.streams();
    let scale = power / m as f64;
    let eig = eigen_sorted(&(user.h1() * user.h1().adjoint()));
    let feedback = eig.eigenvalues[..m]
        .iter()
        .map(|&l| 1.0 + scale * l.max(0.0))
        .product();
    (
        feedback,
        Postprocessor::from_orthonormal_columns(&eig.vectors(0, m)),
    )
}

/// TDM2 feedback: rate loss from transmitter 2 alone after projecting onto the
/// null space of `H_2 H_2^H`. Since that Gram has rank `M`, the value is 1 up
/// to rounding.
pub fn tdm2_feedback(user: &UserChannels, power: f64) -> (f64, Postprocessor) {
    let m = user.streams();
    weakest_directions(&(user.h2() * user.h2().adjoint()), m, power / m as f64)
}

/// Index of the smallest (or largest) feedback; ties go to the lowest index.
pub fn select_user(feedbacks: &[f64], direction: Direction) -> Result<usize> {
    let mut iter = feedbacks.iter().enumerate();
    let (mut best_idx, mut best) = match iter.next() {
        Some((i, &v)) => (i, v),
        None => return Err(OiaError::EmptyGroup),
    };
    for (i, &v) in iter {
        let better = match direction {
            Direction::Min => v < best,
            Direction::Max => v > best,
        };
        if better {
            best_idx = i;
            best = v;
        }
    }
    Ok(best_idx)
}

fn pick<T>(values: Vec<(f64, T)>, direction: Direction) -> Result<(usize, f64, T)> {
    let feedbacks: Vec<f64> = values.iter().map(|(v, _)| *v).collect();
    let idx = select_user(&feedbacks, direction)?;
    let (feedback, extra) = values.into_iter().nth(idx).expect("index in range");
    Ok((idx, feedback, extra))
}

/// Runs one scheme on one group snapshot.
pub fn run_scheme(scheme: SchemeId, group: &[UserChannels], power: f64) -> Result<SchemeOutcome> {
    if group.is_empty() {
        return Err(OiaError::EmptyGroup);
    }
    let outcome = match scheme {
        SchemeId::Oia1 => {
            let values = group.iter().map(|u| oia1_feedback(u, power)).collect();
            let (selected, feedback, f) = pick(values, Direction::Min)?;
            let rate = achievable_rate(&f, &group[selected], power);
            SchemeOutcome {
                selected,
                feedback,
                postprocessor: Some(f),
                rate,
            }
        }
        SchemeId::Oia2 => {
            let feedbacks = group
                .iter()
                .map(oia2_feedback)
                .collect::<Result<Vec<f64>>>()?;
            let selected = select_user(&feedbacks, Direction::Min)?;
            // only the selected user computes its projection
            let (_, f) = oia1_feedback(&group[selected], power);
            let rate = achievable_rate(&f, &group[selected], power);
            SchemeOutcome {
                selected,
                feedback: feedbacks[selected],
                postprocessor: Some(f),
                rate,
            }
        }
        SchemeId::MaxSnr | SchemeId::Tdm1 => {
            let values = group.iter().map(|u| maxsnr_feedback(u, power)).collect();
            let (selected, feedback, f) = pick(values, Direction::Max)?;
            let user = &group[selected];
            let rate = if scheme == SchemeId::MaxSnr {
                achievable_rate(&f, user, power)
            } else {
                achievable_rate(&f, &user.without_interference(), power) / 3.0
            };
            SchemeOutcome {
                selected,
                feedback,
                postprocessor: Some(f),
                rate,
            }
        }
        SchemeId::Tdm2 => {
            let values = group.iter().map(|u| tdm2_feedback(u, power)).collect();
            let (selected, feedback, f) = pick(values, Direction::Min)?;
            let rate =
                2.0 * achievable_rate(&f, &group[selected].without_interferer3(), power) / 3.0;
            SchemeOutcome {
                selected,
                feedback,
                postprocessor: Some(f),
                rate,
            }
        }
        SchemeId::Opt => {
            let capacities: Vec<f64> = group.iter().map(|u| capacity_joint(u, power)).collect();
            let selected = select_user(&capacities, Direction::Max)?;
            SchemeOutcome {
                selected,
                feedback: capacities[selected],
                postprocessor: None,
                rate: capacities[selected],
            }
        }
    };
    Ok(outcome)
}
