//! Tapped-delay-line channel grids and the per-RE channel application.

use mrx_phy::{GridRole, ResourceGrid};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::{ChanError, Result};

/// Static description of the multipath profile, before the Doppler
/// coefficient is known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TdlParams {
    pub taps: usize,
    /// power decay of the last tap relative to the first, in dB
    pub decay_db: f64,
    /// delay of the last tap as a fraction of the useful symbol
    pub delay_span: f64,
}

impl Default for TdlParams {
    fn default() -> Self {
        // L=8 exponential profile, last tap -15 dB, ~10% delay spread
        TdlParams {
            taps: 8,
            decay_db: 15.0,
            delay_span: 0.1,
        }
    }
}

impl TdlParams {
    pub fn spec(&self, rho: f64) -> TdlChannelSpec {
        TdlChannelSpec::new(self.taps, self.decay_db, self.delay_span, rho)
    }
}

/// Fully resolved tap model: delays in units of the useful symbol,
/// normalized powers and the per-symbol AR(1) coefficient.
#[derive(Debug, Clone)]
pub struct TdlChannelSpec {
    pub delays: Vec<f64>,
    pub powers: Vec<f64>,
    pub rho: f64,
}

impl TdlChannelSpec {
    pub fn new(taps: usize, decay_db: f64, delay_span: f64, rho: f64) -> Self {
        assert!(taps >= 1);
        let delays: Vec<f64> = (0..taps)
            .map(|l| {
                if taps == 1 {
                    0.0
                } else {
                    delay_span * l as f64 / (taps - 1) as f64
                }
            })
            .collect();
        let mut powers: Vec<f64> = (0..taps)
            .map(|l| {
                if taps == 1 {
                    1.0
                } else {
                    10f64.powf(-decay_db / 10.0 * l as f64 / (taps - 1) as f64)
                }
            })
            .collect();
        let total: f64 = powers.iter().sum();
        for p in &mut powers {
            *p /= total;
        }
        TdlChannelSpec {
            delays,
            powers,
            rho: rho.clamp(0.0, 1.0),
        }
    }

    /// Flat, time-invariant single-tap channel.
    pub fn flat() -> Self {
        TdlChannelSpec::new(1, 0.0, 0.0, 1.0)
    }
}

fn complex_gaussian<R: Rng>(rng: &mut R, var: f64) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// Draw one channel realization: `H[f,t] = sum_l g_l(t) e^{-j2π f τ_l}`
/// with taps evolving over symbols via AR(1) with coefficient rho.
pub fn generate_channel<R: Rng>(
    spec: &TdlChannelSpec,
    n_c: usize,
    n_s: usize,
    rng: &mut R,
) -> ResourceGrid {
    let l = spec.delays.len();
    let mut taps: Vec<Complex64> = spec
        .powers
        .iter()
        .map(|&p| complex_gaussian(rng, p))
        .collect();
    let innov = (1.0 - spec.rho * spec.rho).max(0.0).sqrt();
    // precompute the per-subcarrier steering of each tap
    let mut steer = vec![Complex64::default(); l * n_c];
    for (li, &tau) in spec.delays.iter().enumerate() {
        for f in 0..n_c {
            let phase = -2.0 * std::f64::consts::PI * f as f64 * tau;
            steer[li * n_c + f] = Complex64::from_polar(1.0, phase);
        }
    }
    let mut grid = ResourceGrid::zero(n_c, n_s, GridRole::Channel);
    for t in 0..n_s {
        if t > 0 && innov > 0.0 {
            for (li, tap) in taps.iter_mut().enumerate() {
                let w = complex_gaussian(rng, spec.powers[li]);
                *tap = *tap * spec.rho + w * innov;
            }
        }
        for f in 0..n_c {
            let mut h = Complex64::default();
            for li in 0..l {
                h += taps[li] * steer[li * n_c + f];
            }
            *grid.at_mut(f, t) = h;
        }
    }
    grid
}

/// `Y = H ∘ X + N` with i.i.d. circular complex Gaussian noise of total
/// variance `sigma2` per RE.
pub fn apply_channel<R: Rng>(
    x: &ResourceGrid,
    h: &ResourceGrid,
    sigma2: f64,
    rng: &mut R,
) -> Result<ResourceGrid> {
    if !x.same_dims(h) {
        return Err(ChanError::Shape(format!(
            "x {}x{} vs h {}x{}",
            x.n_c, x.n_s, h.n_c, h.n_s
        )));
    }
    if sigma2 < 0.0 {
        return Err(ChanError::BadConfig(format!("sigma2 {sigma2} < 0")));
    }
    let mut y = ResourceGrid::zero(x.n_c, x.n_s, GridRole::Received);
    for (out, (&xi, &hi)) in y
        .raw_mut()
        .iter_mut()
        .zip(x.raw().iter().zip(h.raw()))
    {
        let n = if sigma2 > 0.0 {
            complex_gaussian(rng, sigma2)
        } else {
            Complex64::default()
        };
        *out = hi * xi + n;
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use mrx_phy::GridRole;

    #[test]
    fn tap_powers_sum_to_one() {
        let spec = TdlParams::default().spec(0.99);
        let sum: f64 = spec.powers.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn single_tap_zero_doppler_is_flat_and_static() {
        let spec = TdlChannelSpec::flat();
        let mut rng = stream(1, &[0]);
        let h = generate_channel(&spec, 6, 5, &mut rng);
        let h00 = h.at(0, 0);
        for t in 0..5 {
            for f in 0..6 {
                assert!((h.at(f, t) - h00).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_doppler_columns_identical() {
        let spec = TdlChannelSpec::new(4, 12.0, 0.1, 1.0);
        let mut rng = stream(2, &[0]);
        let h = generate_channel(&spec, 8, 6, &mut rng);
        for t in 1..6 {
            for f in 0..8 {
                assert!((h.at(f, t) - h.at(f, 0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn unit_average_channel_energy() {
        let spec = TdlParams::default().spec(0.995);
        let mut rng = stream(3, &[0]);
        let mut acc = 0.0;
        let n = 10_000;
        for _ in 0..n {
            let h = generate_channel(&spec, 4, 2, &mut rng);
            acc += h.energy() / (4.0 * 2.0);
        }
        let mean = acc / n as f64;
        assert!((mean - 1.0).abs() < 0.02, "E|H|^2 = {mean}");
    }

    #[test]
    fn frequency_autocorrelation_decays() {
        let spec = TdlParams::default().spec(1.0);
        let mut rng = stream(4, &[0]);
        let n_c = 48;
        let mut corr0 = 0.0;
        let mut corr_max = Complex64::default();
        for _ in 0..4000 {
            let h = generate_channel(&spec, n_c, 1, &mut rng);
            corr0 += h.at(0, 0).norm_sqr();
            corr_max += h.at(0, 0) * h.at(n_c - 1, 0).conj();
        }
        let ratio = corr_max.norm() / corr0;
        assert!(ratio < 0.99, "autocorrelation at max separation: {ratio}");
    }

    #[test]
    fn identity_channel_zero_noise_is_passthrough() {
        let x = ResourceGrid::from_fn(4, 3, GridRole::Transmitted, |f, t| {
            Complex64::new(f as f64, t as f64)
        });
        let ones = ResourceGrid::from_fn(4, 3, GridRole::Channel, |_, _| Complex64::new(1.0, 0.0));
        let mut rng = stream(5, &[0]);
        let y = apply_channel(&x, &ones, 0.0, &mut rng).unwrap();
        assert_eq!(y.raw(), x.raw());
    }

    #[test]
    fn noise_variance_matches_sigma2() {
        let x = ResourceGrid::zero(100, 100, GridRole::Transmitted);
        let h = ResourceGrid::from_fn(100, 100, GridRole::Channel, |_, _| Complex64::new(1.0, 0.0));
        let mut rng = stream(6, &[0]);
        let sigma2 = 0.37;
        let y = apply_channel(&x, &h, sigma2, &mut rng).unwrap();
        let var = y.energy() / (100.0 * 100.0);
        assert!((var - sigma2).abs() / sigma2 < 0.05, "var {var}");
    }

    #[test]
    fn apply_channel_is_deterministic_given_stream() {
        let x = ResourceGrid::from_fn(4, 4, GridRole::Transmitted, |f, t| {
            Complex64::new(f as f64 - 1.0, t as f64)
        });
        let h = ResourceGrid::from_fn(4, 4, GridRole::Channel, |_, _| Complex64::new(0.5, 0.5));
        let y1 = apply_channel(&x, &h, 0.1, &mut stream(9, &[1])).unwrap();
        let y2 = apply_channel(&x, &h, 0.1, &mut stream(9, &[1])).unwrap();
        assert_eq!(y1.raw(), y2.raw());
    }

    #[test]
    fn shape_mismatch_rejected() {
        let x = ResourceGrid::zero(4, 3, GridRole::Transmitted);
        let h = ResourceGrid::zero(4, 4, GridRole::Channel);
        assert!(apply_channel(&x, &h, 0.1, &mut stream(0, &[])).is_err());
    }
}
