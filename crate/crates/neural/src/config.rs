//! Model hyperparameters, parameter counting and FLOP enumeration.

use crate::{NeuralError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    pub d_model: usize,
    pub heads: usize,
    pub layers: usize,
    pub ff: usize,
    /// bits per QAM symbol (LLRs emitted per data RE)
    pub m: usize,
    pub max_n_r: usize,
    pub n_c: usize,
    pub n_s: usize,
    /// fixed affine `a * sigma2 + b` standardizing the noise-variance
    /// token feature, derived from the training SNR range
    pub sigma2_scale: f64,
    pub sigma2_shift: f64,
}

impl ModelConfig {
    /// Full-scale configuration: d_model 64, 8 heads, 4 layers, FFN 128.
    pub fn full(n_c: usize, n_s: usize, m: usize, max_n_r: usize) -> Self {
        ModelConfig {
            d_model: 64,
            heads: 8,
            layers: 4,
            ff: 128,
            m,
            max_n_r,
            n_c,
            n_s,
            sigma2_scale: 1.0,
            sigma2_shift: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d_model == 0 || self.d_model % self.heads != 0 {
            return Err(NeuralError::BadConfig(format!(
                "d_model {} not divisible by {} heads",
                self.d_model, self.heads
            )));
        }
        if self.d_model % 4 != 0 {
            return Err(NeuralError::BadConfig(format!(
                "d_model {} not divisible by 4 (2D positional encoding)",
                self.d_model
            )));
        }
        if self.m == 0 || self.max_n_r == 0 || self.n_c == 0 || self.n_s == 0 {
            return Err(NeuralError::BadConfig("zero-sized dimension".into()));
        }
        Ok(())
    }

    /// Per-head key/value width.
    pub fn d_k(&self) -> usize {
        self.d_model / self.heads
    }

    pub fn n_tokens(&self) -> usize {
        self.n_c * self.n_s
    }

    /// Standardize the training SNR range to a `[-1, 1]` affine for the
    /// σ² token feature. The coefficients are quantized to f32 so the
    /// config survives an f32 checkpoint roundtrip bit-exactly.
    pub fn with_snr_range_db(mut self, lo_db: f64, hi_db: f64) -> Self {
        let s_min = 10f64.powf(-hi_db / 10.0);
        let s_max = 10f64.powf(-lo_db / 10.0);
        let a = 2.0 / (s_max - s_min).max(1e-12);
        self.sigma2_scale = a as f32 as f64;
        self.sigma2_shift = (-1.0 - a * s_min) as f32 as f64;
        self
    }
}

/// 3 -> d_model embedding with bias.
pub fn embed_params(cfg: &ModelConfig) -> usize {
    3 * cfg.d_model + cfg.d_model
}

/// One encoder layer: Q/K/V/O projections with biases, two layer norms
/// and the two-matrix feed-forward block.
pub fn encoder_layer_params(cfg: &ModelConfig) -> usize {
    let d = cfg.d_model;
    let attn = 4 * (d * d + d);
    let norms = 4 * d;
    let ffn = d * cfg.ff + cfg.ff + cfg.ff * d + d;
    attn + norms + ffn
}

/// Cross-attention fusion block: Q/K/V/O with biases plus one layer norm.
pub fn cross_params(cfg: &ModelConfig) -> usize {
    let d = cfg.d_model;
    4 * (d * d + d) + 2 * d
}

/// MLP head: d_model -> ff -> m with biases.
pub fn head_params(cfg: &ModelConfig) -> usize {
    cfg.d_model * cfg.ff + cfg.ff + cfg.ff * cfg.m + cfg.m
}

/// Exact learnable-scalar count by enumeration.
pub fn count_params(cfg: &ModelConfig) -> usize {
    embed_params(cfg)
        + cfg.layers * encoder_layer_params(cfg)
        + cross_params(cfg)
        + head_params(cfg)
}

/// Multiply-accumulate-dominated FLOP count (2 flops per MAC) for one
/// forward pass with `n_r` APs. Softmax/norm elementwise work is omitted;
/// it is negligible next to the matmuls.
pub fn count_flops(cfg: &ModelConfig, n_r: usize) -> u64 {
    let t = cfg.n_tokens() as u64;
    let d = cfg.d_model as u64;
    let ff = cfg.ff as u64;
    let m = cfg.m as u64;
    let nr = n_r as u64;
    let embed = 2 * 3 * d * t;
    // per layer: 4 projections, QK^T scores, attn x V, two FFN matmuls
    let layer = 4 * 2 * d * d * t + 2 * t * t * d + 2 * t * t * d + 2 * 2 * t * d * ff;
    let per_ap = embed + cfg.layers as u64 * layer;
    // fusion: K/V over all APs, Q/O over the anchor, tiny attention core
    let cross = 2 * 2 * d * d * nr * t + 2 * 2 * d * d * t + 2 * 2 * t * nr * d;
    let head = 2 * t * (d * ff + ff * m);
    nr * per_ap + cross + head
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_config_param_count_is_about_150k() {
        let cfg = ModelConfig::full(48, 36, 6, 3);
        let n = count_params(&cfg);
        assert_eq!(n, 160_006);
        assert!((135_000..=170_000).contains(&n));
    }

    #[test]
    fn head_only_ablation_count() {
        // zero encoder layers, no fusion: embedding + head
        // embed 3*64+64 = 256; head 64*128+128 + 128*6+6 = 9094
        let cfg = ModelConfig {
            layers: 0,
            ..ModelConfig::full(48, 36, 6, 3)
        };
        assert_eq!(head_params(&cfg), 64 * 128 + 128 + 128 * 6 + 6);
        assert_eq!(embed_params(&cfg) + head_params(&cfg), 9350);
    }

    #[test]
    fn doubling_d_model_roughly_quadruples_params() {
        let small = ModelConfig::full(48, 36, 6, 3);
        let big = ModelConfig {
            d_model: 128,
            ff: 256,
            ..small
        };
        let ratio = count_params(&big) as f64 / count_params(&small) as f64;
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn validation_catches_bad_dims() {
        let mut cfg = ModelConfig::full(48, 36, 6, 3);
        cfg.heads = 7;
        assert!(cfg.validate().is_err());
        let mut cfg = ModelConfig::full(48, 36, 6, 3);
        cfg.d_model = 66;
        cfg.heads = 6;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn snr_range_affine_maps_endpoints_to_unit_interval() {
        let cfg = ModelConfig::full(48, 36, 6, 3).with_snr_range_db(0.0, 24.0);
        let lo = cfg.sigma2_scale * 10f64.powf(-24.0 / 10.0) + cfg.sigma2_shift;
        let hi = cfg.sigma2_scale * 1.0 + cfg.sigma2_shift;
        assert!((lo + 1.0).abs() < 1e-5);
        assert!((hi - 1.0).abs() < 1e-5);
    }

    #[test]
    fn flops_grow_linearly_in_ap_count() {
        let cfg = ModelConfig::full(48, 36, 6, 3);
        let f1 = count_flops(&cfg, 1) as f64;
        let f3 = count_flops(&cfg, 3) as f64;
        assert!(f3 / f1 > 2.5 && f3 / f1 < 3.1);
    }
}
