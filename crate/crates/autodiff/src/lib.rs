//! Dense-tensor numerics with reverse-mode differentiation.
//!
//! A [`Graph`] is a per-forward-pass tape: every operation appends a node
//! holding its output buffer and enough saved state to run the backward
//! rule. Calling [`Graph::backward`] on a scalar loss walks the tape in
//! reverse and populates gradients for every node that requires them.
//!
//! Scalars are generic over [`Real`] (`f32` for training and inference,
//! `f64` for finite-difference gradient checks). Checkpoints on disk are
//! always 32-bit.

mod adam;
mod checkpoint;
mod graph;
mod real;

pub mod gradcheck;

pub use adam::{clip_global_norm, AdamConfig, AdamState};
pub use checkpoint::{read_checkpoint, write_checkpoint, CheckpointTensor, CHECKPOINT_VERSION};
pub use graph::{Graph, TensorId};
pub use real::Real;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: lhs {lhs:?}, rhs {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },
    #[error("{op}: data length {got} does not match shape {shape:?}")]
    BadLength {
        op: &'static str,
        shape: Vec<usize>,
        got: usize,
    },
    #[error("non-finite input to {0}")]
    NonFinite(&'static str),
    #[error("backward requires a scalar loss, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),
    #[error("{0}")]
    Usage(String),
    #[error("checkpoint i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad checkpoint: {0}")]
    BadCheckpoint(String),
}

pub type Result<T> = std::result::Result<T, Error>;
