//! Exact max-log bit-LLR demapping for square QAM.
//!
//! `L_i = ( min_{x: b_i=0} |y - h x|^2 - min_{x: b_i=1} |y - h x|^2 ) / sigma^2`
//! so positive LLR favors bit 1. Square QAM is I/Q-separable, so each
//! axis contributes `m/2` LLRs from a 1-D search over sqrt(M) levels.

use num_complex::Complex64;

use crate::qam::{gray, ConstellationSpec};
use crate::{PhyError, Result};

/// Max-log LLRs for one received symbol given channel coefficient `h`
/// and noise variance `sigma2`.
pub fn exact_llr_demap(
    y: Complex64,
    h: Complex64,
    sigma2: f64,
    spec: &ConstellationSpec,
) -> Result<Vec<f64>> {
    if sigma2 <= 0.0 {
        return Err(PhyError::BadSigma(sigma2));
    }
    let half = spec.m / 2;
    let a = h.norm();
    if a == 0.0 {
        // all hypotheses equidistant: no information
        return Ok(vec![0.0; spec.m]);
    }
    // rotate so distances separate per axis: |y - h x|^2 = |w - a x|^2
    let w = y * h.conj() / a;
    let mut llrs = Vec::with_capacity(spec.m);
    llrs.extend(axis_llrs(w.re, a, sigma2, spec, half));
    llrs.extend(axis_llrs(w.im, a, sigma2, spec, half));
    Ok(llrs)
}

/// Per-axis max-log LLRs, MSB first, for `half` Gray-coded bits.
fn axis_llrs(w: f64, a: f64, sigma2: f64, spec: &ConstellationSpec, half: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(half);
    for bit in 0..half {
        let mut min0 = f64::INFINITY;
        let mut min1 = f64::INFINITY;
        for (idx, &level) in spec.levels.iter().enumerate() {
            let label = gray(idx);
            let d = w - a * level;
            let d2 = d * d;
            if (label >> (half - 1 - bit)) & 1 == 0 {
                min0 = min0.min(d2);
            } else {
                min1 = min1.min(d2);
            }
        }
        out.push((min0 - min1) / sigma2);
    }
    out
}
