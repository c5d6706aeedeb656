//! Cross-attention transformer receiver.
//!
//! Each AP's received grid is tokenized per resource element
//! (`[Re, Im, σ²]`), embedded with a 2D sinusoidal positional encoding and
//! run through a shared pre-norm self-attention encoder. Per RE, the
//! anchor AP's latent queries keys/values from all APs through multi-head
//! cross-attention; a residual plus layer norm yields the fused vector an
//! MLP head maps to `m` bit LLRs. Training maximizes the bit-metric
//! decoding rate, i.e. minimizes the binary cross-entropy of the LLRs
//! against the coded bits.

pub mod config;
pub mod model;
pub mod posenc;
pub mod token;
pub mod train;

pub use config::ModelConfig;
pub use model::{bmd_loss, Model};
pub use posenc::positional_encoding_2d;
pub use token::{tokenize, TokenGrid};
pub use train::{train_step, TrainMetrics};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NeuralError {
    #[error("invalid model config: {0}")]
    BadConfig(String),
    #[error("observation has {got} APs, model supports at most {max}")]
    TooManyAps { got: usize, max: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite loss at step {step}: {loss}")]
    Diverged { step: u64, loss: f64 },
    #[error(transparent)]
    Autodiff(#[from] mrx_autodiff::Error),
    #[error(transparent)]
    Phy(#[from] mrx_phy::PhyError),
    #[error("bad checkpoint: {0}")]
    BadCheckpoint(String),
}

pub type Result<T> = std::result::Result<T, NeuralError>;
