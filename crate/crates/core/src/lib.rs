//! Opportunistic interference alignment in the three-transmitter `M x 2M`
//! MIMO interference channel.
//!
//! Each transmitter picks one of `K` users in its group based on a scalar
//! fed back by every user. The schemes here differ in what that scalar is:
//! residual interference after projection (OIA1), alignment of the two
//! interfering subspaces (OIA2), or plain signal strength (MAX-SNR and the
//! time-division baselines). Rates are evaluated exactly from the channel
//! matrices with log-det formulas; no symbols or noise are sampled.

pub mod channel;
pub mod complexity;
pub mod error;
pub mod grassmann;
pub mod linalg;
pub mod rng;
pub mod schemes;
pub mod simulate;
pub mod stats;

/// Library version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use channel::{Postprocessor, SystemConfig, UserChannels};
pub use error::{OiaError, Result};
pub use grassmann::{DistortionBoundParams, GeneratorMatrix, PrincipalAngles};
pub use linalg::{ComplexMatrix, HermitianEigen};
pub use schemes::{SchemeId, SchemeOutcome};
pub use simulate::{KRule, SweepRecord, SweepResult, SweepSpec};
pub use stats::McEstimate;
