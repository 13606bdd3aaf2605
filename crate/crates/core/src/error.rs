use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OiaError {
    #[error("matrix is not Hermitian (max |A - A^H| = {max_asymmetry:e})")]
    NotHermitian { max_asymmetry: f64 },

    #[error("matrix is rank deficient (smallest singular value {smallest_singular_value:e})")]
    RankDeficient { smallest_singular_value: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("matrix columns are not orthonormal (deviation {deviation:e})")]
    NotOrthonormal { deviation: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid shape for flop count: m = {m}, n = {n}")]
    InvalidShape { m: u64, n: u64 },

    #[error("user group is empty")]
    EmptyGroup,

    #[error("regression window contains {points} SNR point(s), need at least 2")]
    WindowTooNarrow { points: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("trial {trial} hit {redraws} degenerate draws in a row")]
    TooManyRedraws { trial: usize, redraws: usize },
}

pub type Result<T> = std::result::Result<T, OiaError>;
