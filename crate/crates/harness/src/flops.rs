//! Per-block compute report for the transformer receiver.
//!
//! Counting convention (stated in the rendered report): one
//! multiply-accumulate is 2 FLOPs, matmuls only, full (non-sparse)
//! attention over all grid tokens; elementwise softmax/norm work is
//! omitted as negligible.

use mrx_neural::config::{count_flops, count_params};
use mrx_neural::ModelConfig;

#[derive(Debug, Clone)]
pub struct FlopsReport {
    pub cfg: ModelConfig,
    pub n_r: usize,
    pub params: usize,
    pub total_flops: u64,
    /// (block label, FLOPs) in forward order
    pub blocks: Vec<(String, u64)>,
}

pub fn flops_report(cfg: &ModelConfig, n_r: usize) -> FlopsReport {
    let t = cfg.n_tokens() as u64;
    let d = cfg.d_model as u64;
    let ff = cfg.ff as u64;
    let m = cfg.m as u64;
    let nr = n_r as u64;
    let embed = 2 * 3 * d * t;
    let layer = 4 * 2 * d * d * t + 2 * t * t * d + 2 * t * t * d + 2 * 2 * t * d * ff;
    let cross = 2 * 2 * d * d * nr * t + 2 * 2 * d * d * t + 2 * 2 * t * nr * d;
    let head = 2 * t * (d * ff + ff * m);
    let blocks = vec![
        (format!("embedding x{n_r}"), nr * embed),
        (
            format!("encoder ({} layers) x{n_r}", cfg.layers),
            nr * cfg.layers as u64 * layer,
        ),
        ("cross-attention fusion".to_string(), cross),
        ("LLR head".to_string(), head),
    ];
    let total = blocks.iter().map(|(_, f)| f).sum::<u64>();
    debug_assert_eq!(total, count_flops(cfg, n_r));
    FlopsReport {
        cfg: *cfg,
        n_r,
        params: count_params(cfg),
        total_flops: total,
        blocks,
    }
}

impl FlopsReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "model d={} heads={} layers={} ff={} grid={}x{} n_r={}\n",
            self.cfg.d_model,
            self.cfg.heads,
            self.cfg.layers,
            self.cfg.ff,
            self.cfg.n_c,
            self.cfg.n_s,
            self.n_r
        ));
        out.push_str(&format!("parameters: {}\n", self.params));
        for (name, f) in &self.blocks {
            out.push_str(&format!("  {name:<28} {:>14} FLOPs\n", f));
        }
        out.push_str(&format!(
            "total: {} FLOPs ({:.3} GFLOPs)\n",
            self.total_flops,
            self.total_flops as f64 / 1e9
        ));
        out.push_str(
            "convention: 2 FLOPs per multiply-accumulate, matmuls only, \
             full attention over all grid tokens\n",
        );
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocks_sum_to_the_enumerated_total() {
        let cfg = ModelConfig::full(48, 36, 6, 3);
        for n_r in 1..=3 {
            let rep = flops_report(&cfg, n_r);
            assert_eq!(rep.total_flops, count_flops(&cfg, n_r));
            let sum: u64 = rep.blocks.iter().map(|(_, f)| f).sum();
            assert_eq!(sum, rep.total_flops);
        }
    }

    #[test]
    fn render_mentions_the_counting_convention() {
        let rep = flops_report(&ModelConfig::full(12, 12, 2, 2), 2);
        let text = rep.render();
        assert!(text.contains("2 FLOPs per multiply-accumulate"));
        assert!(text.contains("parameters"));
    }
}
