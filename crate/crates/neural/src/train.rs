//! Batched BMD training step.
//!
//! Each batch item is a fresh multi-AP observation; per-item graphs run
//! independently (in parallel when the `parallel` feature is on) and their
//! gradients are reduced in item order, so a step is bit-identical across
//! thread counts. Gradients are globally clipped before the Adam update.

use mrx_autodiff::{clip_global_norm, AdamState, Graph};
use mrx_chansim::MultiApObservation;
use mrx_phy::PilotMask;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::model::{data_rows, Model};
use crate::token::tokenize;
use crate::{NeuralError, Result};

/// Global gradient-norm clip applied every step.
pub const GRAD_CLIP: f64 = 1.0;

#[derive(Debug, Clone, Copy)]
pub struct TrainMetrics {
    pub loss: f64,
    pub r_bmd: f64,
    /// pre-clip global gradient norm
    pub grad_norm: f64,
}

fn item_pass(
    model: &Model<f32>,
    obs: &MultiApObservation,
    rows: &[usize],
) -> Result<(f64, Vec<Vec<f32>>)> {
    let tokens = tokenize(obs, &model.cfg)?;
    let mut g = Graph::new();
    let (logits, gp) = model.build_forward(&mut g, &tokens, rows, true)?;
    let loss_id = model.bmd_loss_graph(&mut g, logits, &obs.coded_bits)?;
    let loss = g.data(loss_id)[0] as f64;
    g.backward(loss_id)?;
    let grads: Vec<Vec<f32>> = gp.ids.iter().map(|&id| g.grad(id).to_vec()).collect();
    Ok((loss, grads))
}

/// One optimizer step over a batch. `step` indexes the run for
/// diagnostics; a non-finite batch loss aborts with it.
pub fn train_step(
    model: &mut Model<f32>,
    batch: &[MultiApObservation],
    mask: &PilotMask,
    opt: &mut AdamState<f32>,
    step: u64,
) -> Result<TrainMetrics> {
    if batch.is_empty() {
        return Err(NeuralError::Shape("empty training batch".into()));
    }
    let rows = data_rows(mask);

    #[cfg(feature = "parallel")]
    let results: Vec<(f64, Vec<Vec<f32>>)> = batch
        .par_iter()
        .map(|obs| item_pass(model, obs, &rows))
        .collect::<Result<_>>()?;
    #[cfg(not(feature = "parallel"))]
    let results: Vec<(f64, Vec<Vec<f32>>)> = batch
        .iter()
        .map(|obs| item_pass(model, obs, &rows))
        .collect::<Result<_>>()?;

    let inv_b = 1.0 / batch.len() as f32;
    let mut loss = 0.0;
    let mut grads: Vec<Vec<f32>> = model
        .param_sizes()
        .into_iter()
        .map(|n| vec![0.0f32; n])
        .collect();
    // fixed item order keeps the reduction deterministic
    for (item_loss, item_grads) in &results {
        loss += item_loss;
        for (acc, g) in grads.iter_mut().zip(item_grads) {
            for (a, &x) in acc.iter_mut().zip(g) {
                *a += x * inv_b;
            }
        }
    }
    loss /= batch.len() as f64;
    if !loss.is_finite() {
        return Err(NeuralError::Diverged { step, loss });
    }
    let grad_norm = clip_global_norm(&mut grads, GRAD_CLIP);
    let grad_refs: Vec<&[f32]> = grads.iter().map(|g| g.as_slice()).collect();
    let mut params = model.params_flat_mut();
    opt.step(&mut params, &grad_refs);
    Ok(TrainMetrics {
        loss,
        r_bmd: 1.0 - loss,
        grad_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ModelConfig;
    use mrx_autodiff::AdamConfig;
    use mrx_chansim::rng::stream;
    use mrx_chansim::scenario::{sample_scenario, ScenarioConfig};
    use mrx_chansim::tdl::TdlParams;
    use mrx_phy::{ConstellationSpec, FrameFormat};

    fn micro_setup() -> (ModelConfig, PilotMask, FrameFormat) {
        let mask = PilotMask::columns(12, 12, &[2, 9]).unwrap();
        let code = mrx_phy::ldpc::generate_qc(5, 10, 24, 1).unwrap();
        let fmt =
            FrameFormat::new(&mask, code, ConstellationSpec::square_qam(2).unwrap()).unwrap();
        let cfg = ModelConfig {
            d_model: 16,
            heads: 2,
            layers: 1,
            ff: 16,
            m: 2,
            max_n_r: 2,
            n_c: 12,
            n_s: 12,
            sigma2_scale: 1.0,
            sigma2_shift: 0.0,
        };
        (cfg, mask, fmt)
    }

    fn batch(mask: &PilotMask, fmt: &FrameFormat, n: usize, seed: u64) -> Vec<MultiApObservation> {
        let scfg = ScenarioConfig {
            n_ap: 2,
            target_avg_ebn0_db: 14.0,
            ..Default::default()
        };
        let mut rng = stream(seed, &[]);
        (0..n)
            .map(|_| {
                let scn = sample_scenario(&scfg, 1.5, &mut rng).unwrap();
                mrx_chansim::make_observation(&scn, &TdlParams::default(), mask, fmt, &mut rng)
                    .unwrap()
            })
            .collect()
    }

    #[test]
    fn zero_learning_rate_leaves_params_unchanged() {
        let (cfg, mask, fmt) = micro_setup();
        let mut model = Model::<f32>::new(cfg, 1).unwrap();
        let before = model.flatten();
        let mut opt = AdamState::new(
            AdamConfig {
                lr: 0.0,
                ..Default::default()
            },
            &model.param_sizes(),
        );
        let b = batch(&mask, &fmt, 2, 9);
        train_step(&mut model, &b, &mask, &mut opt, 0).unwrap();
        assert_eq!(model.flatten(), before);
    }

    #[test]
    fn overfitting_a_frozen_batch_reduces_loss() {
        let (cfg, mask, fmt) = micro_setup();
        let mut model = Model::<f32>::new(cfg, 2).unwrap();
        let mut opt = AdamState::new(AdamConfig::default(), &model.param_sizes());
        let b = batch(&mask, &fmt, 2, 10);
        let first = train_step(&mut model, &b, &mask, &mut opt, 0).unwrap();
        let mut last = first;
        for s in 1..50 {
            last = train_step(&mut model, &b, &mask, &mut opt, s).unwrap();
        }
        assert!(
            last.loss < 0.8 * first.loss,
            "loss {} -> {}",
            first.loss,
            last.loss
        );
        assert!((last.r_bmd - (1.0 - last.loss)).abs() < 1e-12);
    }

    #[test]
    fn train_step_is_deterministic() {
        let (cfg, mask, fmt) = micro_setup();
        let b = batch(&mask, &fmt, 3, 11);
        let run = || {
            let mut model = Model::<f32>::new(cfg, 3).unwrap();
            let mut opt = AdamState::new(AdamConfig::default(), &model.param_sizes());
            for s in 0..3 {
                train_step(&mut model, &b, &mask, &mut opt, s).unwrap();
            }
            model.flatten()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn empty_batch_rejected() {
        let (cfg, mask, _) = micro_setup();
        let mut model = Model::<f32>::new(cfg, 4).unwrap();
        let mut opt = AdamState::new(AdamConfig::default(), &model.param_sizes());
        assert!(train_step(&mut model, &[], &mask, &mut opt, 0).is_err());
    }
}
