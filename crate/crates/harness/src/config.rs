//! Serializable run configurations and the desk/full profiles.

use serde::{Deserialize, Serialize};

use mrx_chansim::tdl::TdlParams;
use mrx_phy::{CodeConfig, ConstellationSpec, FrameFormat, PilotMask};

use crate::{fnv64, HarnessError, Result};

/// Waveform + code selection shared by sweeps and training jobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkSetup {
    pub n_c: usize,
    pub n_s: usize,
    pub pilot_cols: Vec<usize>,
    /// bits per QAM symbol
    pub qam_m: usize,
    pub code: CodeChoice,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CodeChoice {
    /// 802.11n n=648 rate-3/4
    Wifi648,
    /// deterministic quasi-cyclic code for small grids
    MicroQc {
        rows: usize,
        cols: usize,
        z: usize,
        seed: u64,
    },
}

impl LinkSetup {
    /// Full-scale link: 48x36 grid, 64-QAM, n=648 rate-3/4 code.
    pub fn full() -> Self {
        LinkSetup {
            n_c: 48,
            n_s: 36,
            pilot_cols: vec![2, 32],
            qam_m: 6,
            code: CodeChoice::Wifi648,
        }
    }

    /// Desk-scale link: 12x12 grid, 4-QAM, 240-bit rate-1/2 code.
    pub fn micro() -> Self {
        LinkSetup {
            n_c: 12,
            n_s: 12,
            pilot_cols: vec![2, 9],
            qam_m: 2,
            code: CodeChoice::MicroQc {
                rows: 5,
                cols: 10,
                z: 24,
                seed: 1,
            },
        }
    }

    pub fn code_config(&self) -> Result<CodeConfig> {
        Ok(match &self.code {
            CodeChoice::Wifi648 => mrx_phy::ldpc::wifi_648_rate34(),
            CodeChoice::MicroQc { rows, cols, z, seed } => {
                mrx_phy::ldpc::generate_qc(*rows, *cols, *z, *seed)?
            }
        })
    }

    pub fn build(&self) -> Result<(PilotMask, FrameFormat)> {
        let mask = PilotMask::columns(self.n_c, self.n_s, &self.pilot_cols)?;
        let spec = ConstellationSpec::square_qam(self.qam_m)?;
        let fmt = FrameFormat::new(&mask, self.code_config()?, spec)?;
        Ok((mask, fmt))
    }

    /// Linear Eb/N0-to-SNR factor `m * code_rate` (pilot overhead
    /// excluded by convention).
    pub fn bits_per_symbol_rate(&self) -> Result<f64> {
        let code = self.code_config()?;
        Ok(self.qam_m as f64 * code.k as f64 / code.n as f64)
    }
}

/// Serializable mirror of [`TdlParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TdlSettings {
    pub taps: usize,
    pub decay_db: f64,
    pub delay_span: f64,
}

impl TdlSettings {
    pub fn full() -> Self {
        TdlSettings {
            taps: 8,
            decay_db: 15.0,
            delay_span: 0.1,
        }
    }

    pub fn micro() -> Self {
        TdlSettings {
            taps: 4,
            decay_db: 12.0,
            delay_span: 0.1,
        }
    }

    pub fn params(&self) -> TdlParams {
        TdlParams {
            taps: self.taps,
            decay_db: self.decay_db,
            delay_span: self.delay_span,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub receiver: String,
    pub n_ap_list: Vec<usize>,
    pub link: LinkSetup,
    pub tdl: TdlSettings,
    pub ue_speed_range: (f64, f64),
    /// strictly increasing, in dB
    pub ebn0_grid_db: Vec<f64>,
    pub iterations: usize,
    pub frames_per_iter: usize,
    pub seeds: Vec<u64>,
    pub bandwidth_db: f64,
    /// checkpoint path for neural receivers
    pub checkpoint: Option<String>,
    /// raw hard-decision BER instead of post-LDPC info-bit BER
    pub uncoded: bool,
}

impl SweepConfig {
    /// Desk-scale defaults: 200 iterations x 4 frames, 3 seeds, 0-24 dB.
    pub fn desk(receiver: &str) -> Self {
        SweepConfig {
            receiver: receiver.into(),
            n_ap_list: vec![1],
            link: LinkSetup::full(),
            tdl: TdlSettings::full(),
            ue_speed_range: (0.0, 3.0),
            ebn0_grid_db: (0..=12).map(|i| 2.0 * i as f64).collect(),
            iterations: 200,
            frames_per_iter: 4,
            seeds: vec![1, 2, 3],
            bandwidth_db: 1.0,
            checkpoint: None,
            uncoded: false,
        }
    }

    /// Full-scale profile: 5000 iterations x 16 frames, 5 seeds.
    pub fn full(receiver: &str) -> Self {
        SweepConfig {
            iterations: 5000,
            frames_per_iter: 16,
            seeds: vec![1, 2, 3, 4, 5],
            ..SweepConfig::desk(receiver)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations < 1 || self.frames_per_iter < 1 {
            return Err(HarnessError::BadConfig("iterations/frames must be >= 1".into()));
        }
        if self.bandwidth_db <= 0.0 {
            return Err(HarnessError::BadConfig("bandwidth must be > 0".into()));
        }
        if self.ebn0_grid_db.windows(2).any(|w| w[1] <= w[0]) || self.ebn0_grid_db.is_empty() {
            return Err(HarnessError::BadConfig(
                "Eb/N0 grid must be nonempty and strictly increasing".into(),
            ));
        }
        if self.seeds.is_empty() || self.n_ap_list.is_empty() {
            return Err(HarnessError::BadConfig("need >= 1 seed and AP count".into()));
        }
        Ok(())
    }

    /// Stable hash of the canonical serialized config, embedded in every
    /// output file.
    pub fn config_hash(&self) -> u64 {
        fnv64(toml::to_string(self).expect("config serializes").as_bytes())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainJobConfig {
    pub link: LinkSetup,
    pub tdl: TdlSettings,
    pub d_model: usize,
    pub heads: usize,
    pub layers: usize,
    pub ff: usize,
    pub max_n_r: usize,
    /// APs per item drawn uniformly from this inclusive range
    pub n_ap_range: (usize, usize),
    pub ebn0_range_db: (f64, f64),
    pub ue_speed_range: (f64, f64),
    pub steps: u64,
    pub batch: usize,
    pub seed: u64,
    pub lr: f64,
}

impl TrainJobConfig {
    /// Micro profile: 12x12 grid, 4-QAM, d_model 32, 2 layers.
    pub fn micro() -> Self {
        TrainJobConfig {
            link: LinkSetup::micro(),
            tdl: TdlSettings::micro(),
            d_model: 32,
            heads: 4,
            layers: 2,
            ff: 64,
            max_n_r: 2,
            n_ap_range: (1, 2),
            ebn0_range_db: (2.0, 16.0),
            ue_speed_range: (0.0, 3.0),
            steps: 1500,
            batch: 8,
            seed: 1,
            lr: 1e-3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_ap_range.0 < 1
            || self.n_ap_range.0 > self.n_ap_range.1
            || self.n_ap_range.1 > self.max_n_r
        {
            return Err(HarnessError::BadConfig(format!(
                "AP range {:?} incompatible with max_n_r {}",
                self.n_ap_range, self.max_n_r
            )));
        }
        if self.batch == 0 {
            return Err(HarnessError::BadConfig("batch must be >= 1".into()));
        }
        if self.ebn0_range_db.0 > self.ebn0_range_db.1 {
            return Err(HarnessError::BadConfig("empty Eb/N0 range".into()));
        }
        Ok(())
    }

    pub fn model_config(&self) -> mrx_neural::ModelConfig {
        mrx_neural::ModelConfig {
            d_model: self.d_model,
            heads: self.heads,
            layers: self.layers,
            ff: self.ff,
            m: self.qam_m(),
            max_n_r: self.max_n_r,
            n_c: self.link.n_c,
            n_s: self.link.n_s,
            sigma2_scale: 1.0,
            sigma2_shift: 0.0,
        }
        .with_snr_range_db(self.ebn0_range_db.0, self.ebn0_range_db.1 + 10.0)
    }

    pub fn qam_m(&self) -> usize {
        self.link.qam_m
    }

    pub fn config_hash(&self) -> u64 {
        fnv64(toml::to_string(self).expect("config serializes").as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_profile_validates() {
        SweepConfig::desk("ls").validate().unwrap();
        SweepConfig::full("lmmse").validate().unwrap();
        TrainJobConfig::micro().validate().unwrap();
    }

    #[test]
    fn non_increasing_grid_rejected() {
        let mut cfg = SweepConfig::desk("ls");
        cfg.ebn0_grid_db = vec![0.0, 2.0, 2.0];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn toml_roundtrip() {
        let cfg = SweepConfig::desk("transformer");
        let text = toml::to_string(&cfg).unwrap();
        let back: SweepConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.config_hash(), cfg.config_hash());
    }

    #[test]
    fn hash_tracks_config_changes() {
        let a = SweepConfig::desk("ls");
        let mut b = a.clone();
        b.iterations += 1;
        assert_ne!(a.config_hash(), b.config_hash());
    }

    #[test]
    fn micro_link_builds() {
        let (mask, fmt) = LinkSetup::micro().build().unwrap();
        assert_eq!(mask.data_re_count() * 2, 240);
        assert_eq!(fmt.n_codewords, 1);
        assert_eq!(fmt.filler_bits, 0);
    }
}
