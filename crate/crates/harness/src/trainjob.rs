//! Training-job driver: deterministic batch generation keyed on
//! `(seed, step, item)`, metrics logging, checkpointing with optimizer
//! state, and bitwise-exact resume.

use std::path::{Path, PathBuf};
use std::time::Instant;

use mrx_autodiff::{
    read_checkpoint, write_checkpoint, AdamConfig, AdamState, CheckpointTensor,
};
use mrx_chansim::rng::stream;
use mrx_chansim::scenario::{sample_scenario, ScenarioConfig};
use mrx_chansim::{make_observation, MultiApObservation};
use mrx_neural::{train_step, Model, NeuralError};
use mrx_phy::{FrameFormat, PilotMask};
use rand::Rng;

use crate::config::TrainJobConfig;
use crate::{HarnessError, Result};

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub steps: u64,
    pub final_loss: f64,
    pub final_r_bmd: f64,
    pub model_path: PathBuf,
    pub metrics_path: PathBuf,
}

/// One fresh batch for a given step index. Every item draws from its own
/// substream, so the batch depends only on `(cfg.seed, step, item)`.
pub fn make_batch(
    cfg: &TrainJobConfig,
    mask: &PilotMask,
    fmt: &FrameFormat,
    step: u64,
) -> Result<Vec<MultiApObservation>> {
    let rate = cfg.link.bits_per_symbol_rate()?;
    (0..cfg.batch)
        .map(|item| {
            let mut rng = stream(cfg.seed, &[step, item as u64]);
            let n_ap = rng.gen_range(cfg.n_ap_range.0..=cfg.n_ap_range.1);
            let ebn0 = rng.gen_range(cfg.ebn0_range_db.0..=cfg.ebn0_range_db.1);
            let scfg = ScenarioConfig {
                n_ap,
                target_avg_ebn0_db: ebn0,
                ue_speed_range: cfg.ue_speed_range,
                ..Default::default()
            };
            let scn = sample_scenario(&scfg, rate, &mut rng)?;
            Ok(make_observation(&scn, &cfg.tdl.params(), mask, fmt, &mut rng)?)
        })
        .collect()
}

/// Write `model.ckpt` (parameters + config) and `opt.ckpt` (Adam moments
/// and step count) into `dir`.
pub fn save_train_state(dir: &Path, model: &Model<f32>, opt: &AdamState<f32>) -> Result<()> {
    model.save(&dir.join("model.ckpt"))?;
    let (m, v) = opt.moments();
    let mut tensors = vec![CheckpointTensor {
        name: "__opt".into(),
        dims: vec![1],
        data: vec![opt.step_count() as f32],
    }];
    assert!(opt.step_count() < (1 << 24), "step count exceeds f32 integer range");
    for (i, buf) in m.iter().enumerate() {
        tensors.push(CheckpointTensor {
            name: format!("m.{i}"),
            dims: vec![buf.len()],
            data: buf.clone(),
        });
    }
    for (i, buf) in v.iter().enumerate() {
        tensors.push(CheckpointTensor {
            name: format!("v.{i}"),
            dims: vec![buf.len()],
            data: buf.clone(),
        });
    }
    write_checkpoint(&dir.join("opt.ckpt"), &tensors)?;
    Ok(())
}

/// Inverse of [`save_train_state`]. The Adam hyperparameters come from
/// `cfg` (they are not checkpointed) so a resumed run and an uninterrupted
/// run use bit-identical update rules.
pub fn load_train_state(dir: &Path, cfg: &TrainJobConfig) -> Result<(Model<f32>, AdamState<f32>)> {
    let model = Model::<f32>::load(&dir.join("model.ckpt"))?;
    let tensors = read_checkpoint(&dir.join("opt.ckpt"))?;
    let step = tensors
        .iter()
        .find(|t| t.name == "__opt")
        .ok_or_else(|| HarnessError::BadConfig("opt checkpoint missing __opt".into()))?
        .data[0] as u64;
    let n = model.param_sizes().len();
    let pull = |prefix: &str| -> Result<Vec<Vec<f32>>> {
        (0..n)
            .map(|i| {
                tensors
                    .iter()
                    .find(|t| t.name == format!("{prefix}.{i}"))
                    .map(|t| t.data.clone())
                    .ok_or_else(|| {
                        HarnessError::BadConfig(format!("opt checkpoint missing {prefix}.{i}"))
                    })
            })
            .collect()
    };
    let adam_cfg = AdamConfig {
        lr: cfg.lr,
        ..Default::default()
    };
    let opt = AdamState::from_parts(adam_cfg, pull("m")?, pull("v")?, step);
    Ok((model, opt))
}

/// Train per `cfg`, writing `model.ckpt`, `opt.ckpt` and `metrics.csv`
/// into `out_dir`. Pass `resume` to continue from a prior state directory;
/// the resumed trajectory is bit-identical to an uninterrupted run.
/// Divergence aborts with the last good state already on disk.
pub fn run_training_job(
    cfg: &TrainJobConfig,
    out_dir: &Path,
    resume: Option<&Path>,
) -> Result<TrainReport> {
    cfg.validate()?;
    let (mask, fmt) = cfg.link.build()?;
    std::fs::create_dir_all(out_dir).map_err(|source| HarnessError::Io {
        path: out_dir.display().to_string(),
        source,
    })?;

    let (mut model, mut opt) = match resume {
        Some(dir) => load_train_state(dir, cfg)?,
        None => {
            let model = Model::<f32>::new(cfg.model_config(), cfg.seed)?;
            let opt = AdamState::new(
                AdamConfig {
                    lr: cfg.lr,
                    ..Default::default()
                },
                &model.param_sizes(),
            );
            (model, opt)
        }
    };

    let metrics_path = out_dir.join("metrics.csv");
    let file = std::fs::File::create(&metrics_path).map_err(|source| HarnessError::Io {
        path: metrics_path.display().to_string(),
        source,
    })?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(["step", "loss", "r_bmd", "grad_norm", "wall_clock_s"])
        .map_err(|e| HarnessError::Csv(e.to_string()))?;

    let t0 = Instant::now();
    let start = opt.step_count();
    let (mut final_loss, mut final_r_bmd) = (f64::NAN, f64::NAN);
    for step in start..cfg.steps {
        let batch = make_batch(cfg, &mask, &fmt, step)?;
        let metrics = match train_step(&mut model, &batch, &mask, &mut opt, step) {
            Ok(m) => m,
            Err(NeuralError::Diverged { step, loss }) => {
                // params are still pre-update: persist them as last-good
                save_train_state(out_dir, &model, &opt)?;
                return Err(HarnessError::Diverged {
                    step,
                    loss,
                    saved: out_dir.display().to_string(),
                });
            }
            Err(e) => return Err(e.into()),
        };
        w.serialize((
            step,
            metrics.loss,
            metrics.r_bmd,
            metrics.grad_norm,
            t0.elapsed().as_secs_f64(),
        ))
        .map_err(|e| HarnessError::Csv(e.to_string()))?;
        final_loss = metrics.loss;
        final_r_bmd = metrics.r_bmd;
    }
    w.flush().map_err(|source| HarnessError::Io {
        path: metrics_path.display().to_string(),
        source,
    })?;
    save_train_state(out_dir, &model, &opt)?;
    Ok(TrainReport {
        steps: cfg.steps,
        final_loss,
        final_r_bmd,
        model_path: out_dir.join("model.ckpt"),
        metrics_path,
    })
}
