//! Monte Carlo BER sweeps with per-seed series, deterministic
//! counter-based substreams, and Gaussian-kernel curve smoothing.

use mrx_chansim::rng::stream;
use mrx_chansim::scenario::{sample_scenario, ScenarioConfig};
use mrx_chansim::make_observation;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::config::SweepConfig;
use crate::receiver::Receiver;
use crate::Result;

/// How iterations are scheduled. Results are bit-identical either way:
/// every iteration draws from its own `(point, seed, iter)` substream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecMode {
    Sequential,
    /// rayon work-stealing over iterations; falls back to sequential when
    /// the `parallel` feature is disabled
    Parallel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerPoint {
    pub ebn0_db: f64,
    /// one BER per entry of [`BerCurve::seeds`]
    pub per_seed: Vec<f64>,
    pub mean: f64,
    /// kernel-smoothed mean, filled by [`run_monte_carlo_ber`]
    pub smoothed: f64,
    /// bits counted across all seeds
    pub bits: u64,
    pub errors: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerCurve {
    pub receiver: String,
    pub n_ap: usize,
    pub pilot_cols: Vec<usize>,
    pub uncoded: bool,
    pub seeds: Vec<u64>,
    pub config_hash: u64,
    pub points: Vec<BerPoint>,
}

/// Errors/bits for one iteration (`frames_per_iter` frames).
fn run_iteration(
    cfg: &SweepConfig,
    rx: &Receiver,
    n_ap: usize,
    ebn0_db: f64,
    seed: u64,
    point_idx: u64,
    iter: u64,
) -> Result<(u64, u64)> {
    let (mask, fmt) = cfg.link.build()?;
    let rate = cfg.link.bits_per_symbol_rate()?;
    let scfg = ScenarioConfig {
        n_ap,
        target_avg_ebn0_db: ebn0_db,
        ue_speed_range: cfg.ue_speed_range,
        ..Default::default()
    };
    let mut rng = stream(seed, &[point_idx, iter]);
    let (mut errors, mut bits) = (0u64, 0u64);
    for _ in 0..cfg.frames_per_iter {
        let scn = sample_scenario(&scfg, rate, &mut rng)?;
        let obs = make_observation(&scn, &cfg.tdl.params(), &mask, &fmt, &mut rng)?;
        let llrs = rx.llrs(&obs, &mask, &fmt.spec)?;
        if cfg.uncoded {
            // raw hard decisions against the transmitted coded bits
            for (l, &b) in llrs.iter().zip(&obs.coded_bits) {
                if (*l > 0.0) != (b == 1) {
                    errors += 1;
                }
            }
            bits += obs.coded_bits.len() as u64;
        } else {
            let (info, _) = fmt.decode_frame(&llrs)?;
            for (a, b) in info.iter().zip(&obs.info_bits) {
                if a != b {
                    errors += 1;
                }
            }
            bits += info.len() as u64;
        }
    }
    Ok((errors, bits))
}

/// Sweep one receiver at one AP count over the configured Eb/N0 grid.
pub fn run_monte_carlo_ber(
    cfg: &SweepConfig,
    rx: &Receiver,
    n_ap: usize,
    mode: ExecMode,
) -> Result<BerCurve> {
    cfg.validate()?;
    let mut points = Vec::with_capacity(cfg.ebn0_grid_db.len());
    for (pi, &ebn0_db) in cfg.ebn0_grid_db.iter().enumerate() {
        let mut per_seed = Vec::with_capacity(cfg.seeds.len());
        let (mut tot_err, mut tot_bits) = (0u64, 0u64);
        for &seed in &cfg.seeds {
            let iters = 0..cfg.iterations as u64;
            let counts: Vec<(u64, u64)> = match mode {
                #[cfg(feature = "parallel")]
                ExecMode::Parallel => iters
                    .into_par_iter()
                    .map(|it| run_iteration(cfg, rx, n_ap, ebn0_db, seed, pi as u64, it))
                    .collect::<Result<_>>()?,
                _ => iters
                    .map(|it| run_iteration(cfg, rx, n_ap, ebn0_db, seed, pi as u64, it))
                    .collect::<Result<_>>()?,
            };
            let (e, b) = counts
                .iter()
                .fold((0u64, 0u64), |(ae, ab), &(e, b)| (ae + e, ab + b));
            per_seed.push(e as f64 / b as f64);
            tot_err += e;
            tot_bits += b;
        }
        let mean = tot_err as f64 / tot_bits as f64;
        points.push(BerPoint {
            ebn0_db,
            per_seed,
            mean,
            smoothed: mean,
            bits: tot_bits,
            errors: tot_err,
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.ebn0_db).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.mean).collect();
    // a zero count only bounds the BER; floor at half an error
    let floor = points
        .iter()
        .map(|p| 0.5 / p.bits.max(1) as f64)
        .fold(f64::INFINITY, f64::min);
    let sm = kernel_smooth(&xs, &ys, cfg.bandwidth_db, floor);
    for (p, s) in points.iter_mut().zip(sm) {
        p.smoothed = s;
    }
    Ok(BerCurve {
        receiver: rx.name().to_string(),
        n_ap,
        pilot_cols: cfg.link.pilot_cols.clone(),
        uncoded: cfg.uncoded,
        seeds: cfg.seeds.clone(),
        config_hash: cfg.config_hash(),
        points,
    })
}

/// Nadaraya-Watson estimate at `x0`: Gaussian kernel over the dB axis,
/// averaging in log10(BER) so the smooth tracks the waterfall's slope.
/// All `ber` values must be positive.
pub fn kernel_smooth_at(x_db: &[f64], ber: &[f64], x0: f64, bandwidth_db: f64) -> f64 {
    assert_eq!(x_db.len(), ber.len());
    let (mut num, mut den) = (0.0f64, 0.0f64);
    for (&x, &y) in x_db.iter().zip(ber) {
        let u = (x - x0) / bandwidth_db;
        let w = (-0.5 * u * u).exp();
        num += w * y.log10();
        den += w;
    }
    10f64.powf(num / den)
}

/// Smooth a whole curve, flooring zero (and sub-floor) estimates first so
/// the log-domain average is defined.
pub fn kernel_smooth(x_db: &[f64], ber: &[f64], bandwidth_db: f64, floor: f64) -> Vec<f64> {
    let floored: Vec<f64> = ber.iter().map(|&y| y.max(floor)).collect();
    x_db.iter()
        .map(|&x| kernel_smooth_at(x_db, &floored, x, bandwidth_db))
        .collect()
}
