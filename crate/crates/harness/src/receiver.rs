//! Unified receiver dispatch over the classical chains and the
//! transformer model.

use std::path::Path;

use mrx_chansim::covariance::{analytic_covariance, CovarianceModel};
use mrx_chansim::MultiApObservation;
use mrx_classical::{receive, FusionRule, ReceiverConfig};
use mrx_neural::Model;
use mrx_phy::{ConstellationSpec, PilotMask};

use crate::config::{LinkSetup, TdlSettings};
use crate::{HarnessError, Result};

/// One receiver chain; all variants emit fused LLRs over the grid's
/// coded-bit capacity in fill order.
pub enum Receiver {
    /// genie CSI, sum fusion
    PerfectCsi,
    Ls { fusion: FusionRule },
    Lmmse { cfg: ReceiverConfig },
    Neural { model: Model<f32> },
}

impl Receiver {
    /// Build from a config string: `perfect`, `ls`, `ls-snr`, `lmmse`,
    /// or `transformer` (which needs a checkpoint path).
    pub fn from_spec(
        name: &str,
        link: &LinkSetup,
        tdl: &TdlSettings,
        nominal_rho: f64,
        checkpoint: Option<&Path>,
    ) -> Result<Receiver> {
        Ok(match name {
            "perfect" => Receiver::PerfectCsi,
            "ls" => Receiver::Ls {
                fusion: FusionRule::Sum,
            },
            "ls-snr" => Receiver::Ls {
                fusion: FusionRule::SnrWeighted,
            },
            "lmmse" => {
                let mask = PilotMask::columns(link.n_c, link.n_s, &link.pilot_cols)?;
                let cov = nominal_covariance(tdl, &mask, nominal_rho);
                Receiver::Lmmse {
                    cfg: ReceiverConfig::lmmse(cov),
                }
            }
            "transformer" => {
                let path = checkpoint.ok_or_else(|| {
                    HarnessError::BadConfig("transformer receiver needs a checkpoint".into())
                })?;
                Receiver::Neural {
                    model: Model::<f32>::load(path)?,
                }
            }
            other => {
                return Err(HarnessError::BadConfig(format!(
                    "unknown receiver '{other}' (perfect|ls|ls-snr|lmmse|transformer)"
                )))
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Receiver::PerfectCsi => "perfect",
            Receiver::Ls {
                fusion: FusionRule::Sum,
            } => "ls",
            Receiver::Ls { .. } => "ls-snr",
            Receiver::Lmmse { .. } => "lmmse",
            Receiver::Neural { .. } => "transformer",
        }
    }

    pub fn llrs(
        &self,
        obs: &MultiApObservation,
        mask: &PilotMask,
        spec: &ConstellationSpec,
    ) -> Result<Vec<f64>> {
        Ok(match self {
            Receiver::PerfectCsi => receive(obs, mask, spec, &ReceiverConfig::perfect())?,
            Receiver::Ls { fusion } => {
                let mut cfg = ReceiverConfig::ls();
                cfg.fusion = *fusion;
                receive(obs, mask, spec, &cfg)?
            }
            Receiver::Lmmse { cfg } => receive(obs, mask, spec, cfg)?,
            Receiver::Neural { model } => model.infer_llrs(obs, mask)?,
        })
    }
}

/// Closed-form covariance at a fixed nominal Doppler coefficient, used by
/// the LMMSE chain across the whole sweep.
pub fn nominal_covariance(tdl: &TdlSettings, mask: &PilotMask, rho: f64) -> CovarianceModel {
    analytic_covariance(&tdl.params().spec(rho), mask)
}
