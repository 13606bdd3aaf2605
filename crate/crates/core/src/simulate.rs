//! Monte-Carlo harness: SNR sweeps, user scaling and DoF slope estimation.
//!
//! Trial `t` at SNR index `s` of a sweep with seed `seed` draws its group from
//! the stream `(seed, s, t)`. Trials run in parallel and are reduced in trial
//! order, so results depend only on the spec. Sweeps of different schemes with
//! the same seed see the same channel draws, and a group of `K` users is a
//! prefix of the group of `K' > K` users.

use rayon::prelude::*;

use crate::channel::{log2_det_i_plus, UserChannels};
use crate::error::{OiaError, Result};
use crate::linalg::random_gaussian_matrix;
use crate::rng;
use crate::schemes::{run_scheme, SchemeId};
use crate::stats::McEstimate;

/// Consecutive degenerate draws tolerated in one trial.
pub const MAX_REDRAWS: usize = 10;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// How many users each group has at a given power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KRule {
    Fixed(usize),
    /// `K(P) = max(1, round(c P^{dof M}))`, targeting `dof` degrees of freedom.
    Scaled {
        c: f64,
        dof: f64,
    },
}

impl KRule {
    pub fn users(&self, power: f64, m: usize) -> usize {
        match *self {
            KRule::Fixed(k) => k,
            KRule::Scaled { c, dof } => {
                let k = (c * power.powf(dof * m as f64)).round();
                if k.is_finite() && k >= 1.0 {
                    k as usize
                } else {
                    1
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub scheme: SchemeId,
    pub m: usize,
    pub k_rule: KRule,
    pub snr_db: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(OiaError::InvalidConfig("M must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(OiaError::InvalidConfig("trials must be at least 1".into()));
        }
        if self.snr_db.is_empty() {
            return Err(OiaError::InvalidConfig("SNR list is empty".into()));
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(OiaError::InvalidConfig("SNR values must be finite".into()));
        }
        if self.snr_db.windows(2).any(|w| w[1] <= w[0]) {
            return Err(OiaError::InvalidConfig(
                "SNR list must be strictly increasing".into(),
            ));
        }
        match self.k_rule {
            KRule::Fixed(0) => Err(OiaError::InvalidConfig("K must be at least 1".into())),
            KRule::Scaled { c, .. } if !(c > 0.0 && c.is_finite()) => Err(OiaError::InvalidConfig(
                format!("scaling constant c = {c} must be positive"),
            )),
            KRule::Scaled { dof, .. } if !(0.0..=self.m as f64).contains(&dof) => Err(
                OiaError::InvalidConfig(format!("target DoF {dof} is outside [0, M = {}]", self.m)),
            ),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub snr_db: f64,
    /// Users per group at this SNR.
    pub k: usize,
    pub mean_rate: f64,
    pub std_error: f64,
    pub trials: usize,
    /// Degenerate draws replaced across all trials.
    pub redraws: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub scheme: SchemeId,
    pub m: usize,
    pub records: Vec<SweepRecord>,
}

fn run_trial(
    scheme: SchemeId,
    m: usize,
    k: usize,
    power: f64,
    rng: &mut rng::TrialRng,
    trial: usize,
) -> Result<(f64, usize)> {
    for redraw in 0..=MAX_REDRAWS {
        let group: Vec<UserChannels> = (0..k).map(|_| UserChannels::draw(2 * m, m, rng)).collect();
        match run_scheme(scheme, &group, power) {
            Ok(outcome) => return Ok((outcome.rate, redraw)),
            Err(OiaError::RankDeficient { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(OiaError::TooManyRedraws {
        trial,
        redraws: MAX_REDRAWS,
    })
}

/// Transmitter-1 rates of every trial at one SNR point, in trial order.
pub fn trial_rates(spec: &SweepSpec, snr_index: usize) -> Result<(Vec<f64>, usize)> {
    let power = db_to_linear(spec.snr_db[snr_index]);
    let k = spec.k_rule.users(power, spec.m);
    let outcomes = (0..spec.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::stream(spec.seed, &[snr_index as u64, t as u64]);
            run_trial(spec.scheme, spec.m, k, power, &mut rng, t)
        })
        .collect::<Result<Vec<(f64, usize)>>>()?;
    let redraws = outcomes.iter().map(|(_, r)| r).sum();
    Ok((
        outcomes.into_iter().map(|(rate, _)| rate).collect(),
        redraws,
    ))
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let mut records = Vec::with_capacity(spec.snr_db.len());
    for (i, &snr_db) in spec.snr_db.iter().enumerate() {
        let (rates, redraws) = trial_rates(spec, i)?;
        let est = McEstimate::from_samples(&rates);
        records.push(SweepRecord {
            snr_db,
            k: spec.k_rule.users(db_to_linear(snr_db), spec.m),
            mean_rate: est.mean,
            std_error: est.std_error,
            trials: spec.trials,
            redraws,
        });
    }
    Ok(SweepResult {
        scheme: spec.scheme,
        m: spec.m,
        records,
    })
}

/// Mean rate at a single SNR for each group size in `ks`, all sharing the
/// same per-trial streams.
pub fn run_convergence(
    scheme: SchemeId,
    m: usize,
    snr_db: f64,
    ks: &[usize],
    trials: usize,
    seed: u64,
) -> Result<Vec<SweepRecord>> {
    ks.iter()
        .map(|&k| {
            let spec = SweepSpec {
                scheme,
                m,
                k_rule: KRule::Fixed(k),
                snr_db: vec![snr_db],
                trials,
                seed,
            };
            Ok(run_sweep(&spec)?.records.remove(0))
        })
        .collect()
}

/// Least-squares slope of mean rate against `log2 P` over SNR points in
/// `[snr_lo_db, snr_hi_db]`.
pub fn dof_slope(result: &SweepResult, snr_lo_db: f64, snr_hi_db: f64) -> Result<f64> {
    let eps = 1e-9;
    let points: Vec<(f64, f64)> = result
        .records
        .iter()
        .filter(|r| r.snr_db >= snr_lo_db - eps && r.snr_db <= snr_hi_db + eps)
        .map(|r| (r.snr_db / 10.0 * 10f64.log2(), r.mean_rate))
        .collect();
    if points.len() < 2 {
        return Err(OiaError::WindowTooNarrow {
            points: points.len(),
        });
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Ergodic rate `E log2 det(I + (P/M) H H^H)` of an interference-free `M x M`
/// link with i.i.d. CN(0,1) entries.
pub fn interference_free_reference(
    m: usize,
    power: f64,
    trials: usize,
    seed: u64,
) -> Result<McEstimate> {
    if m == 0 || trials == 0 || power.is_nan() || power <= 0.0 {
        return Err(OiaError::InvalidParams(format!(
            "need M >= 1, trials >= 1, P > 0 (M = {m}, trials = {trials}, P = {power})"
        )));
    }
    let scale = power / m as f64;
    let samples: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::stream(seed, &[t as u64]);
            let h = random_gaussian_matrix(m, m, &mut rng);
            log2_det_i_plus(scale, &(&h * h.adjoint()))
        })
        .collect();
    Ok(McEstimate::from_samples(&samples))
}
