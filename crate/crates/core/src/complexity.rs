//! Analytic flop counts.
//!
//! A real add, multiply or divide is one flop, so a complex add is 2 and a
//! complex multiply is 6. Shapes refer to an `m x n` complex matrix with
//! `m >= n`. Scheme totals are expressed through `N_R = 2M`.

use crate::error::{OiaError, Result};
use crate::schemes::SchemeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlopOp {
    /// `αG` or `G + G`.
    ScaleOrAdd,
    FrobeniusNorm,
    /// `G G^H`.
    Gram,
    GramSchmidt,
    Svd,
}

pub fn op_flops(op: FlopOp, m: u64, n: u64) -> Result<u64> {
    if n == 0 || m < n {
        return Err(OiaError::InvalidShape { m, n });
    }
    Ok(match op {
        FlopOp::ScaleOrAdd => 2 * m * n,
        FlopOp::FrobeniusNorm => 4 * m * n,
        FlopOp::Gram | FlopOp::GramSchmidt => 8 * m * n * n - 2 * m * n,
        FlopOp::Svd => 24 * m * m * n + 48 * m * n * n + 54 * n * n * n,
    })
}

/// Total flops spent on feedback computation by a group of `k` users.
///
/// OIA2 adds the postprocessor computation of the selected user only.
pub fn scheme_flops(scheme: SchemeId, k: u64, n_r: u64) -> Result<u64> {
    if k == 0 || n_r < 2 || !n_r.is_multiple_of(2) {
        return Err(OiaError::InvalidShape { m: n_r, n: k });
    }
    let n2 = n_r * n_r;
    let n3 = n2 * n_r;
    // 3/2 N_R is integral for even N_R
    let half3 = 3 * n_r / 2;
    match scheme {
        SchemeId::MaxSnr => Ok(k * (128 * n3 - n2 + half3)),
        SchemeId::Oia1 => Ok(k * (130 * n3 + 3 * n2 + half3)),
        SchemeId::Oia2 => Ok(k * (8 * n3 + 2 * n2) + (130 * n3 + 3 * n2)),
        other => Err(OiaError::InvalidParams(format!(
            "no flop model for scheme {other}"
        ))),
    }
}

pub fn complexity_ratio(a: SchemeId, b: SchemeId, k: u64, n_r: u64) -> Result<f64> {
    Ok(scheme_flops(a, k, n_r)? as f64 / scheme_flops(b, k, n_r)? as f64)
}
