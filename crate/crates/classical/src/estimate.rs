//! Pilot-based channel estimation.
//!
//! LS divides received pilots by the known pilot symbols and linearly
//! interpolates between pilot columns in time (constant extrapolation at
//! the edges). LMMSE filters the raw pilot LS estimates through the
//! channel's second-order statistics.

use mrx_chansim::covariance::CovarianceModel;
use mrx_phy::{GridRole, PilotMask, ResourceGrid};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::{ClassicalError, Result};

/// A full-grid channel estimate with a per-RE error variance
/// (storage order `t * n_c + f`, matching [`ResourceGrid`]).
#[derive(Debug, Clone)]
pub struct ChannelEstimate {
    pub h: ResourceGrid,
    pub err_var: Vec<f64>,
}

impl ChannelEstimate {
    #[inline]
    pub fn var_at(&self, f: usize, t: usize) -> f64 {
        self.err_var[t * self.h.n_c + f]
    }
}

/// Raw LS estimates at the pilot REs, in `pilot_positions` order. Pilots
/// are unit-modulus, so the per-pilot error variance is exactly `sigma2`.
fn ls_at_pilots(y: &ResourceGrid, mask: &PilotMask) -> Result<Vec<Complex64>> {
    if y.n_c != mask.n_c || y.n_s != mask.n_s {
        return Err(ClassicalError::Shape(format!(
            "grid {}x{} vs mask {}x{}",
            y.n_c, y.n_s, mask.n_c, mask.n_s
        )));
    }
    if mask.pilot_cols.is_empty() {
        return Err(ClassicalError::NoPilots);
    }
    Ok(mask
        .pilot_positions()
        .iter()
        .map(|&(f, t)| y.at(f, t) / mask.pilot_value(f, t).unwrap())
        .collect())
}

/// LS estimation with linear time interpolation between pilot columns.
///
/// Interior symbols blend the two bracketing pilot columns with weight
/// `alpha`, giving error variance `((1-alpha)^2 + alpha^2) sigma2`;
/// symbols outside the pilot span copy the nearest column at variance
/// `sigma2`.
pub fn ls_estimate(y: &ResourceGrid, mask: &PilotMask, sigma2: f64) -> Result<ChannelEstimate> {
    let hp = ls_at_pilots(y, mask)?;
    let cols = &mask.pilot_cols;
    let n_c = mask.n_c;
    let at_col = |ci: usize, f: usize| hp[ci * n_c + f];

    let mut h = ResourceGrid::zero(n_c, mask.n_s, GridRole::Estimate);
    let mut err_var = vec![0.0; n_c * mask.n_s];
    for t in 0..mask.n_s {
        // bracketing pilot columns and blend weight for this symbol
        let (c0, c1, alpha) = if t <= cols[0] {
            (0, 0, 0.0)
        } else if t >= *cols.last().unwrap() {
            (cols.len() - 1, cols.len() - 1, 0.0)
        } else {
            let c1 = cols.iter().position(|&c| c > t).unwrap();
            let (t0, t1) = (cols[c1 - 1], cols[c1]);
            (c1 - 1, c1, (t - t0) as f64 / (t1 - t0) as f64)
        };
        let var = sigma2 * ((1.0 - alpha) * (1.0 - alpha) + alpha * alpha);
        for f in 0..n_c {
            *h.at_mut(f, t) = at_col(c0, f) * (1.0 - alpha) + at_col(c1, f) * alpha;
            err_var[t * n_c + f] = var;
        }
    }
    Ok(ChannelEstimate { h, err_var })
}

/// LMMSE estimation: `ĥ = R_all,p (R_pp + σ² I)^{-1} ĥ_LS,p`, with the
/// posterior variance `1 - diag(R_all,p (R_pp + σ² I)^{-1} R_all,p^H)`
/// (the prior per-RE channel power is one by construction).
pub fn lmmse_estimate(
    y: &ResourceGrid,
    mask: &PilotMask,
    sigma2: f64,
    cov: &CovarianceModel,
) -> Result<ChannelEstimate> {
    if cov.n_c != mask.n_c || cov.n_s != mask.n_s {
        return Err(ClassicalError::Shape(format!(
            "covariance {}x{} vs mask {}x{}",
            cov.n_c, cov.n_s, mask.n_c, mask.n_s
        )));
    }
    let hp = ls_at_pilots(y, mask)?;
    let p = hp.len();
    let mut a = cov.r_pp.clone();
    for i in 0..p {
        a[(i, i)] += Complex64::new(sigma2, 0.0);
    }
    let lu = a.lu();
    let w = lu
        .solve(&DVector::from_vec(hp))
        .ok_or(ClassicalError::Singular)?;
    let h_all = &cov.r_all_p * &w;

    // B = (R_pp + σ² I)^{-1} R_all,p^H, then
    // var_i = 1 - Re(Σ_j R_all,p[i,j] B[j,i])
    let b: DMatrix<Complex64> = lu
        .solve(&cov.r_all_p.adjoint())
        .ok_or(ClassicalError::Singular)?;
    let n = h_all.len();
    let mut err_var = vec![0.0; n];
    for i in 0..n {
        let mut filt = Complex64::default();
        for j in 0..p {
            filt += cov.r_all_p[(i, j)] * b[(j, i)];
        }
        err_var[i] = (1.0 - filt.re).max(0.0);
    }
    let n_c = mask.n_c;
    let h = ResourceGrid::from_fn(n_c, mask.n_s, GridRole::Estimate, |f, t| h_all[t * n_c + f]);
    Ok(ChannelEstimate { h, err_var })
}

#[cfg(test)]
mod tests {
    use super::*;
    use mrx_chansim::covariance::analytic_covariance;
    use mrx_chansim::rng::stream;
    use mrx_chansim::tdl::{apply_channel, generate_channel, TdlChannelSpec};

    fn tx_pilot_grid(mask: &PilotMask) -> ResourceGrid {
        ResourceGrid::from_fn(mask.n_c, mask.n_s, GridRole::Transmitted, |f, t| {
            mask.pilot_value(f, t)
                .unwrap_or(Complex64::new(1.0, 0.0))
        })
    }

    #[test]
    fn ls_is_exact_on_static_noiseless_channel() {
        let mask = PilotMask::columns(6, 8, &[1, 6]).unwrap();
        let h_true = ResourceGrid::from_fn(6, 8, GridRole::Channel, |f, _| {
            Complex64::new(0.3 + f as f64 * 0.1, -0.2)
        });
        let tx = tx_pilot_grid(&mask);
        let y = apply_channel(&tx, &h_true, 0.0, &mut stream(0, &[])).unwrap();
        let est = ls_estimate(&y, &mask, 1e-3).unwrap();
        for t in 0..8 {
            for f in 0..6 {
                assert!((est.h.at(f, t) - h_true.at(f, t)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn ls_interpolates_linear_time_variation_exactly() {
        let mask = PilotMask::columns(4, 10, &[2, 8]).unwrap();
        // channel varies linearly in t per subcarrier, so the two-point
        // interpolation reproduces interior columns exactly
        let h_true = ResourceGrid::from_fn(4, 10, GridRole::Channel, |f, t| {
            Complex64::new(1.0 + f as f64, 0.5) + Complex64::new(0.1, -0.05) * t as f64
        });
        let tx = tx_pilot_grid(&mask);
        let y = apply_channel(&tx, &h_true, 0.0, &mut stream(0, &[])).unwrap();
        let est = ls_estimate(&y, &mask, 1e-3).unwrap();
        for t in 2..=8 {
            for f in 0..4 {
                assert!(
                    (est.h.at(f, t) - h_true.at(f, t)).norm() < 1e-12,
                    "f={f} t={t}"
                );
            }
        }
        // edges hold the nearest pilot column
        for f in 0..4 {
            assert!((est.h.at(f, 0) - h_true.at(f, 2)).norm() < 1e-12);
            assert!((est.h.at(f, 9) - h_true.at(f, 8)).norm() < 1e-12);
        }
    }

    #[test]
    fn ls_error_variance_follows_blend_weights() {
        let mask = PilotMask::columns(3, 9, &[0, 4]).unwrap();
        let y = ResourceGrid::zero(3, 9, GridRole::Received);
        let sigma2 = 0.8;
        let est = ls_estimate(&y, &mask, sigma2).unwrap();
        assert!((est.var_at(0, 0) - sigma2).abs() < 1e-12);
        assert!((est.var_at(0, 4) - sigma2).abs() < 1e-12);
        // midpoint: alpha = 0.5 -> variance halves
        assert!((est.var_at(0, 2) - 0.5 * sigma2).abs() < 1e-12);
        // alpha = 0.25 -> (0.75^2 + 0.25^2) = 0.625
        assert!((est.var_at(0, 1) - 0.625 * sigma2).abs() < 1e-12);
        // beyond the last pilot column: copy, full variance
        assert!((est.var_at(0, 8) - sigma2).abs() < 1e-12);
    }

    #[test]
    fn single_pilot_column_is_constant_in_time() {
        let mask = PilotMask::columns(4, 6, &[2]).unwrap();
        let h_true = ResourceGrid::from_fn(4, 6, GridRole::Channel, |f, _| {
            Complex64::new(f as f64 + 0.5, -1.0)
        });
        let tx = tx_pilot_grid(&mask);
        let y = apply_channel(&tx, &h_true, 0.0, &mut stream(0, &[])).unwrap();
        let est = ls_estimate(&y, &mask, 0.1).unwrap();
        for t in 0..6 {
            for f in 0..4 {
                assert!((est.h.at(f, t) - h_true.at(f, 2)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn lmmse_beats_ls_in_mse() {
        let mask = PilotMask::columns(8, 8, &[1, 6]).unwrap();
        let spec = TdlChannelSpec::new(4, 12.0, 0.1, 0.995);
        let cov = analytic_covariance(&spec, &mask);
        let tx = tx_pilot_grid(&mask);
        let mut rng = stream(77, &[]);
        for snr_db in [0.0, 10.0, 20.0] {
            let sigma2 = 10f64.powf(-snr_db / 10.0);
            let (mut mse_ls, mut mse_lm) = (0.0, 0.0);
            let trials = 300;
            for _ in 0..trials {
                let h_true = generate_channel(&spec, 8, 8, &mut rng);
                let y = apply_channel(&tx, &h_true, sigma2, &mut rng).unwrap();
                let ls = ls_estimate(&y, &mask, sigma2).unwrap();
                let lm = lmmse_estimate(&y, &mask, sigma2, &cov).unwrap();
                for t in 0..8 {
                    for f in 0..8 {
                        mse_ls += (ls.h.at(f, t) - h_true.at(f, t)).norm_sqr();
                        mse_lm += (lm.h.at(f, t) - h_true.at(f, t)).norm_sqr();
                    }
                }
            }
            assert!(
                mse_lm < mse_ls,
                "snr {snr_db} dB: lmmse {mse_lm} vs ls {mse_ls}"
            );
        }
    }

    #[test]
    fn lmmse_posterior_variance_tracks_empirical_error() {
        let mask = PilotMask::columns(6, 6, &[0, 5]).unwrap();
        let spec = TdlChannelSpec::new(3, 10.0, 0.1, 0.99);
        let cov = analytic_covariance(&spec, &mask);
        let tx = tx_pilot_grid(&mask);
        let sigma2 = 0.1;
        let mut rng = stream(78, &[]);
        let mut emp = vec![0.0; 36];
        let trials = 4000;
        let mut pred = None;
        for _ in 0..trials {
            let h_true = generate_channel(&spec, 6, 6, &mut rng);
            let y = apply_channel(&tx, &h_true, sigma2, &mut rng).unwrap();
            let lm = lmmse_estimate(&y, &mask, sigma2, &cov).unwrap();
            for t in 0..6 {
                for f in 0..6 {
                    emp[t * 6 + f] += (lm.h.at(f, t) - h_true.at(f, t)).norm_sqr();
                }
            }
            pred.get_or_insert(lm.err_var);
        }
        let pred = pred.unwrap();
        for i in 0..36 {
            let e = emp[i] / trials as f64;
            assert!(
                (e - pred[i]).abs() / pred[i].max(1e-6) < 0.15,
                "re {i}: empirical {e} vs predicted {}",
                pred[i]
            );
        }
    }

    #[test]
    fn no_pilot_columns_is_an_error() {
        let mask = PilotMask::columns(4, 4, &[]).unwrap();
        let y = ResourceGrid::zero(4, 4, GridRole::Received);
        assert!(matches!(
            ls_estimate(&y, &mask, 0.1),
            Err(ClassicalError::NoPilots)
        ));
    }
}
