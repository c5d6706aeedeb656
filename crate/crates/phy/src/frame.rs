//! Codeword-to-grid packing.
//!
//! The grid bit capacity rarely divides the codeword length, so a frame
//! carries `floor(capacity / n)` codewords followed by known all-zero
//! filler bits. Filler positions are excluded from BER accounting.

use crate::grid::PilotMask;
use crate::ldpc::CodeConfig;
use crate::qam::ConstellationSpec;
use crate::{PhyError, Result};
use num_complex::Complex64;

#[derive(Debug, Clone)]
pub struct FrameFormat {
    pub code: CodeConfig,
    pub spec: ConstellationSpec,
    /// coded-bit capacity of the grid (data REs x bits/symbol)
    pub capacity_bits: usize,
    pub n_codewords: usize,
    pub filler_bits: usize,
}

impl FrameFormat {
    pub fn new(mask: &PilotMask, code: CodeConfig, spec: ConstellationSpec) -> Result<Self> {
        let capacity_bits = mask.data_re_count() * spec.m;
        let n_codewords = capacity_bits / code.n;
        if n_codewords == 0 {
            return Err(PhyError::Shape(format!(
                "grid capacity {capacity_bits} bits is smaller than one {}-bit codeword",
                code.n
            )));
        }
        let filler_bits = capacity_bits - n_codewords * code.n;
        Ok(FrameFormat {
            code,
            spec,
            capacity_bits,
            n_codewords,
            filler_bits,
        })
    }

    /// Number of information bits carried per frame (filler excluded).
    pub fn info_bits_per_frame(&self) -> usize {
        self.n_codewords * self.code.k
    }

    /// Encode info bits into the full coded-bit stream (filler appended)
    /// and map to data-RE symbols.
    pub fn encode_frame(&self, info: &[u8]) -> Result<(Vec<u8>, Vec<Complex64>)> {
        if info.len() != self.info_bits_per_frame() {
            return Err(PhyError::Length {
                what: "frame info bits",
                expected: self.info_bits_per_frame(),
                got: info.len(),
            });
        }
        let mut coded = Vec::with_capacity(self.capacity_bits);
        for chunk in info.chunks(self.code.k) {
            coded.extend(self.code.encode(chunk)?);
        }
        coded.resize(self.capacity_bits, 0);
        let symbols = self.spec.map(&coded)?;
        Ok((coded, symbols))
    }

    /// Split a capacity-length LLR stream into codewords (filler LLRs
    /// dropped) and decode each. Returns concatenated info bits and
    /// per-codeword convergence flags.
    pub fn decode_frame(&self, llrs: &[f64]) -> Result<(Vec<u8>, Vec<bool>)> {
        if llrs.len() != self.capacity_bits {
            return Err(PhyError::Length {
                what: "frame llrs",
                expected: self.capacity_bits,
                got: llrs.len(),
            });
        }
        let mut info = Vec::with_capacity(self.info_bits_per_frame());
        let mut flags = Vec::with_capacity(self.n_codewords);
        for cw in 0..self.n_codewords {
            let res = self.code.decode(&llrs[cw * self.code.n..(cw + 1) * self.code.n])?;
            info.extend(res.info_bits);
            flags.push(res.converged);
        }
        Ok((info, flags))
    }
}
