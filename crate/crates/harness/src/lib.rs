//! Configuration-driven benchmarking: Monte Carlo BER sweeps across
//! receiver chains, training jobs for the transformer receiver, curve
//! smoothing, and reproducible CSV/manifest output.

pub mod config;
pub mod flops;
pub mod mc;
pub mod output;
pub mod receiver;
pub mod trainjob;

pub use config::{CodeChoice, LinkSetup, SweepConfig, TdlSettings, TrainJobConfig};
pub use mc::{kernel_smooth, kernel_smooth_at, run_monte_carlo_ber, BerCurve, BerPoint, ExecMode};
pub use receiver::Receiver;
pub use trainjob::{run_training_job, TrainReport};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Phy(#[from] mrx_phy::PhyError),
    #[error(transparent)]
    Chan(#[from] mrx_chansim::ChanError),
    #[error(transparent)]
    Classical(#[from] mrx_classical::ClassicalError),
    #[error(transparent)]
    Neural(#[from] mrx_neural::NeuralError),
    #[error(transparent)]
    Autodiff(#[from] mrx_autodiff::Error),
    #[error("i/o at {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(String),
    #[error("training diverged at step {step} (loss {loss}); last good checkpoint at {saved}")]
    Diverged {
        step: u64,
        loss: f64,
        saved: String,
    },
}

pub type Result<T> = std::result::Result<T, HarnessError>;

/// Deterministic 64-bit FNV-1a, used for config hashes embedded in output
/// metadata (stable across runs and builds, unlike the std hasher).
pub fn fnv64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x1000_0000_01b3);
    }
    h
}
