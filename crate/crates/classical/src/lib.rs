//! Classical baseline receivers: pilot-based LS and LMMSE channel
//! estimation, per-subcarrier equalization, soft demapping under
//! estimated CSI and cross-AP LLR fusion.
//!
//! Estimation error is folded into demapping as extra Gaussian noise:
//! `y = h x + n = ĥ x + (h - ĥ) x + n`, so with unit-energy symbols the
//! effective variance seen by the demapper is `σ² + var(h - ĥ)`.

pub mod equalize;
pub mod estimate;
pub mod fuse;
pub mod receiver;

pub use equalize::{equalize, EqualizedSymbol, Equalizer};
pub use estimate::{lmmse_estimate, ls_estimate, ChannelEstimate};
pub use fuse::{fuse_llrs, FusionRule};
pub use receiver::{receive, CsiMode, ReceiverConfig};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClassicalError {
    #[error(transparent)]
    Phy(#[from] mrx_phy::PhyError),
    #[error(transparent)]
    Chan(#[from] mrx_chansim::ChanError),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("regularized pilot covariance is singular")]
    Singular,
    #[error("no pilot columns to estimate from")]
    NoPilots,
}

pub type Result<T> = std::result::Result<T, ClassicalError>;
