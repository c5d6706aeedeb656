//! UE/AP placement sampling and per-link SNR derivation.
//!
//! Eb/N0 convention (pinned for all emitted curves): Eb counts data-RE
//! symbol energy only (pilot overhead excluded), so per link
//! `Eb/N0 = SNR / (m * code_rate)` in linear units. The configured target
//! is the arithmetic mean of the per-link linear Eb/N0 values; gains are
//! rescaled so the batch mean hits the target exactly.

use rand::Rng;

use crate::{ChanError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub area_side_m: f64,
    pub n_ap: usize,
    /// informational carrier metadata, also used for the Doppler model
    pub carrier_hz: f64,
    pub subcarrier_spacing_hz: f64,
    pub pathloss_exponent: f64,
    /// log-normal shadowing sigma in dB; 0 disables shadowing
    pub shadowing_sigma_db: f64,
    /// UE speed range in m/s (Table-style 0-3)
    pub ue_speed_range: (f64, f64),
    pub target_avg_ebn0_db: f64,
    /// per-link SNR override in dB, bypassing placement sampling
    pub snr_override_db: Option<Vec<f64>>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            area_side_m: 25.0,
            n_ap: 1,
            carrier_hz: 2.4e9,
            subcarrier_spacing_hz: 15e3,
            pathloss_exponent: 3.0,
            shadowing_sigma_db: 0.0,
            ue_speed_range: (0.0, 3.0),
            target_avg_ebn0_db: 10.0,
            snr_override_db: None,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_ap < 1 {
            return Err(ChanError::BadConfig("n_ap must be >= 1".into()));
        }
        if self.area_side_m <= 0.0 {
            return Err(ChanError::BadConfig("area side must be > 0".into()));
        }
        let (lo, hi) = self.ue_speed_range;
        if !(0.0..=3.0).contains(&lo) || !(0.0..=3.0).contains(&hi) || lo > hi {
            return Err(ChanError::BadConfig(format!(
                "UE speed range {lo}..{hi} outside [0, 3] m/s"
            )));
        }
        if let Some(ov) = &self.snr_override_db {
            if ov.len() != self.n_ap {
                return Err(ChanError::BadConfig(format!(
                    "snr override has {} entries for {} APs",
                    ov.len(),
                    self.n_ap
                )));
            }
        }
        Ok(())
    }

    /// AR(1) per-symbol coefficient for a given UE speed
    /// (Jakes-style approximation `exp(-(2π f_d T_sym)^2 / 2)`).
    pub fn doppler_rho(&self, speed_mps: f64) -> f64 {
        let f_d = speed_mps * self.carrier_hz / 299_792_458.0;
        let t_sym = 1.0 / self.subcarrier_spacing_hz;
        let x = 2.0 * std::f64::consts::PI * f_d * t_sym;
        (-x * x / 2.0).exp()
    }
}

/// One sampled topology: per-link SNRs/Eb-N0s (linear) and the UE speed.
#[derive(Debug, Clone)]
pub struct ScenarioRealization {
    pub snr_lin: Vec<f64>,
    pub ebn0_lin: Vec<f64>,
    pub speed_mps: f64,
    pub rho: f64,
}

impl ScenarioRealization {
    pub fn avg_ebn0_db(&self) -> f64 {
        let mean = self.ebn0_lin.iter().sum::<f64>() / self.ebn0_lin.len() as f64;
        10.0 * mean.log10()
    }
}

/// Sample placements and derive normalized per-link gains.
///
/// `bits_per_symbol_rate` is `m * code_rate`, the Eb/N0-to-SNR conversion
/// factor under the pinned convention.
pub fn sample_scenario<R: Rng>(
    cfg: &ScenarioConfig,
    bits_per_symbol_rate: f64,
    rng: &mut R,
) -> Result<ScenarioRealization> {
    cfg.validate()?;
    let speed_mps = if cfg.ue_speed_range.1 > cfg.ue_speed_range.0 {
        rng.gen_range(cfg.ue_speed_range.0..cfg.ue_speed_range.1)
    } else {
        cfg.ue_speed_range.0
    };
    let rho = cfg.doppler_rho(speed_mps);

    let snr_lin: Vec<f64> = match &cfg.snr_override_db {
        Some(ov) => ov.iter().map(|db| 10f64.powf(db / 10.0)).collect(),
        None => {
            let ue = (
                rng.gen_range(0.0..cfg.area_side_m),
                rng.gen_range(0.0..cfg.area_side_m),
            );
            let mut gains = Vec::with_capacity(cfg.n_ap);
            for _ in 0..cfg.n_ap {
                let ap = (
                    rng.gen_range(0.0..cfg.area_side_m),
                    rng.gen_range(0.0..cfg.area_side_m),
                );
                let d = ((ue.0 - ap.0).powi(2) + (ue.1 - ap.1).powi(2))
                    .sqrt()
                    .max(1.0);
                let mut gain_db = -10.0 * cfg.pathloss_exponent * d.log10();
                if cfg.shadowing_sigma_db > 0.0 {
                    let z: f64 = rng.sample(rand_distr::StandardNormal);
                    gain_db += cfg.shadowing_sigma_db * z;
                }
                gains.push(10f64.powf(gain_db / 10.0));
            }
            // rescale so the mean per-link linear Eb/N0 is exactly the target
            let target = 10f64.powf(cfg.target_avg_ebn0_db / 10.0);
            let mean_ebn0: f64 =
                gains.iter().map(|g| g / bits_per_symbol_rate).sum::<f64>() / gains.len() as f64;
            let c = target / mean_ebn0;
            gains.iter().map(|g| g * c).collect()
        }
    };
    let ebn0_lin: Vec<f64> = snr_lin.iter().map(|s| s / bits_per_symbol_rate).collect();
    Ok(ScenarioRealization {
        snr_lin,
        ebn0_lin,
        speed_mps,
        rho,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn single_link_mean_is_the_link() {
        let cfg = ScenarioConfig {
            n_ap: 1,
            target_avg_ebn0_db: 12.0,
            ..Default::default()
        };
        let s = sample_scenario(&cfg, 4.5, &mut stream(1, &[])).unwrap();
        assert_eq!(s.ebn0_lin.len(), 1);
        assert!((s.avg_ebn0_db() - 12.0).abs() < 1e-9);
    }

    #[test]
    fn batch_mean_hits_target_exactly() {
        let cfg = ScenarioConfig {
            n_ap: 3,
            target_avg_ebn0_db: 8.0,
            ..Default::default()
        };
        let mut rng = stream(2, &[]);
        for _ in 0..50 {
            let s = sample_scenario(&cfg, 4.5, &mut rng).unwrap();
            let mean = s.ebn0_lin.iter().sum::<f64>() / 3.0;
            assert!((10.0 * mean.log10() - 8.0).abs() < 1e-9);
        }
    }

    #[test]
    fn override_gives_equal_gains_when_colocated() {
        let cfg = ScenarioConfig {
            n_ap: 2,
            snr_override_db: Some(vec![10.0, 10.0]),
            ..Default::default()
        };
        let s = sample_scenario(&cfg, 4.5, &mut stream(3, &[])).unwrap();
        assert!((s.snr_lin[0] - s.snr_lin[1]).abs() < 1e-12);
    }

    #[test]
    fn speed_range_outside_table_is_rejected() {
        let cfg = ScenarioConfig {
            ue_speed_range: (0.0, 10.0),
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn doppler_is_near_static_at_pedestrian_speed() {
        let cfg = ScenarioConfig::default();
        let rho = cfg.doppler_rho(3.0);
        assert!(rho > 0.9999, "rho {rho}");
    }
}
