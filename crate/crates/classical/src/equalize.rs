//! Per-subcarrier single-tap equalization.

use num_complex::Complex64;

/// Channel magnitude floor guarding the ZF division.
pub const H_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Equalizer {
    Zf,
    Mmse,
}

#[derive(Debug, Clone, Copy)]
pub struct EqualizedSymbol {
    pub x_hat: Complex64,
    /// effective noise variance after equalization (estimation error
    /// included), suitable for demapping `x_hat` against a unit channel
    pub eff_sigma2: f64,
}

/// Equalize one received symbol given the channel estimate, thermal noise
/// variance and the estimate's own error variance.
///
/// ZF divides outright; MMSE shrinks toward zero and is then unbiased so
/// both feed the same demapper. They coincide except near channel nulls,
/// where the floor and the regularization differ.
pub fn equalize(
    y: Complex64,
    h_hat: Complex64,
    sigma2: f64,
    est_var: f64,
    eq: Equalizer,
) -> EqualizedSymbol {
    let total = sigma2 + est_var;
    let mag2 = h_hat.norm_sqr().max(H_FLOOR * H_FLOOR);
    match eq {
        Equalizer::Zf => EqualizedSymbol {
            x_hat: y * h_hat.conj() / mag2,
            eff_sigma2: total / mag2,
        },
        Equalizer::Mmse => {
            let g = h_hat.conj() / (mag2 + total);
            let bias = mag2 / (mag2 + total);
            EqualizedSymbol {
                x_hat: y * g / bias,
                eff_sigma2: total / mag2,
            }
        }
    }
}
