//! Per-RE tokenization of a multi-AP observation.

use mrx_chansim::MultiApObservation;

use crate::{ModelConfig, NeuralError, Result};

/// One AP's token sequence: per RE the raw `[Re, Im, σ²]` triple and the
/// network-facing copy with the σ² feature standardized by the config's
/// fixed affine. Token order is grid storage order (`t * n_c + f`).
#[derive(Debug, Clone)]
pub struct TokenGrid {
    pub n_c: usize,
    pub n_s: usize,
    /// raw features, 3 per token
    pub u: Vec<f64>,
    /// standardized features, 3 per token
    pub x: Vec<f64>,
}

pub fn tokenize(obs: &MultiApObservation, cfg: &ModelConfig) -> Result<Vec<TokenGrid>> {
    if obs.n_ap() > cfg.max_n_r {
        return Err(NeuralError::TooManyAps {
            got: obs.n_ap(),
            max: cfg.max_n_r,
        });
    }
    let mut out = Vec::with_capacity(obs.n_ap());
    for (y, &sigma2) in obs.received.iter().zip(&obs.noise_vars) {
        if y.n_c != cfg.n_c || y.n_s != cfg.n_s {
            return Err(NeuralError::Shape(format!(
                "grid {}x{} vs model {}x{}",
                y.n_c, y.n_s, cfg.n_c, cfg.n_s
            )));
        }
        let s_std = cfg.sigma2_scale * sigma2 + cfg.sigma2_shift;
        let mut u = Vec::with_capacity(y.raw().len() * 3);
        let mut x = Vec::with_capacity(y.raw().len() * 3);
        for v in y.raw() {
            u.extend([v.re, v.im, sigma2]);
            x.extend([v.re, v.im, s_std]);
        }
        out.push(TokenGrid {
            n_c: y.n_c,
            n_s: y.n_s,
            u,
            x,
        });
    }
    Ok(out)
}
