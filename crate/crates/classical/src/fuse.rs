//! Cross-AP LLR combining.
//!
//! Per-link LLRs for the same coded bit are conditionally independent
//! given the bit, so summing them is the exact combining rule when each
//! link's LLRs are correctly scaled. The SNR-weighted variant is the
//! heuristic alternative; its weights are normalized to average one so it
//! reduces to the plain sum when all links have equal SNR.

use crate::{ClassicalError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FusionRule {
    Sum,
    SnrWeighted,
}

/// Combine per-AP LLR streams elementwise. `snrs` (linear, one per AP) is
/// only consulted by [`FusionRule::SnrWeighted`].
pub fn fuse_llrs(per_ap: &[Vec<f64>], rule: FusionRule, snrs: &[f64]) -> Result<Vec<f64>> {
    let n = per_ap.len();
    if n == 0 {
        return Err(ClassicalError::Shape("no LLR streams to fuse".into()));
    }
    let len = per_ap[0].len();
    if per_ap.iter().any(|l| l.len() != len) {
        return Err(ClassicalError::Shape("LLR streams differ in length".into()));
    }
    let weights: Vec<f64> = match rule {
        FusionRule::Sum => vec![1.0; n],
        FusionRule::SnrWeighted => {
            if snrs.len() != n {
                return Err(ClassicalError::Shape(format!(
                    "{} SNRs for {} LLR streams",
                    snrs.len(),
                    n
                )));
            }
            let total: f64 = snrs.iter().sum();
            if total <= 0.0 {
                return Err(ClassicalError::Shape("nonpositive total SNR".into()));
            }
            snrs.iter().map(|s| s * n as f64 / total).collect()
        }
    };
    let mut out = vec![0.0; len];
    for (llrs, w) in per_ap.iter().zip(&weights) {
        for (o, l) in out.iter_mut().zip(llrs) {
            *o += w * l;
        }
    }
    Ok(out)
}
