//! Multi-AP scenario generation and frequency-selective, time-varying
//! channel simulation.
//!
//! Channels are a tapped-delay-line surrogate: L complex-Gaussian taps
//! with an exponential power-delay profile, evolving across OFDM symbols
//! through a per-symbol AR(1) process. Tap powers sum to one so the
//! per-link SNR is governed solely by the scenario gain and noise
//! variance.

pub mod covariance;
pub mod observation;
pub mod rng;
pub mod scenario;
pub mod tdl;

pub use covariance::CovarianceModel;
pub use observation::{make_observation, MultiApObservation};
pub use scenario::{sample_scenario, ScenarioConfig, ScenarioRealization};
pub use tdl::{apply_channel, generate_channel, TdlChannelSpec, TdlParams};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChanError {
    #[error("invalid scenario config: {0}")]
    BadConfig(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("covariance estimation needs >= {need} samples, got {got}")]
    InsufficientSamples { need: usize, got: usize },
    #[error(transparent)]
    Phy(#[from] mrx_phy::PhyError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad covariance cache file: {0}")]
    BadCache(String),
}

pub type Result<T> = std::result::Result<T, ChanError>;
