//! Bit-level transmit chain and its inverse: LDPC coding, Gray QAM
//! mapping, resource-grid assembly with pilots, exact max-log soft
//! demapping and normalized min-sum belief-propagation decoding.
//!
//! LLR sign convention everywhere: `L = log p(bit=1)/p(bit=0)`, so a
//! positive LLR means bit 1 is more likely.

pub mod alist;
pub mod demap;
pub mod frame;
pub mod grid;
pub mod ldpc;
pub mod qam;

pub use demap::exact_llr_demap;
pub use frame::FrameFormat;
pub use grid::{GridRole, LlrGrid, PilotMask, ResourceGrid};
pub use ldpc::CodeConfig;
pub use qam::ConstellationSpec;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PhyError {
    #[error("length mismatch: expected {expected}, got {got} ({what})")]
    Length {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("invalid noise variance {0} (must be > 0)")]
    BadSigma(f64),
    #[error("unsupported modulation: {0} bits per symbol")]
    BadModulation(usize),
    #[error("parity submatrix is singular; cannot build systematic encoder")]
    SingularParity,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("zero-valued pilot symbol at (f={0}, t={1})")]
    ZeroPilot(usize, usize),
    #[error("alist parse error: {0}")]
    Alist(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, PhyError>;
