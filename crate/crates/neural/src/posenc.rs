//! 2D sinusoidal positional encoding.
//!
//! The first `d_model/2` channels encode the subcarrier index, the last
//! half the symbol index. Within each half, channels are sin/cos
//! interleaved over geometric wavelengths from 1 to 10^4, the standard
//! transformer recipe applied per axis. Deterministic and parameter-free.

use crate::{NeuralError, Result};

/// Encoding for every token in grid storage order (`t * n_c + f`),
/// flattened to `n_c * n_s * d_model` values.
pub fn positional_encoding_2d(n_c: usize, n_s: usize, d_model: usize) -> Result<Vec<f64>> {
    if d_model % 4 != 0 || d_model == 0 {
        return Err(NeuralError::BadConfig(format!(
            "positional encoding needs d_model divisible by 4, got {d_model}"
        )));
    }
    let quarter = d_model / 4;
    let freqs: Vec<f64> = (0..quarter)
        .map(|j| 10_000f64.powf(-(j as f64) / quarter as f64))
        .collect();
    let mut out = Vec::with_capacity(n_c * n_s * d_model);
    for t in 0..n_s {
        for f in 0..n_c {
            for (pos, _) in [(f as f64, 0), (t as f64, 1)] {
                for &w in &freqs {
                    out.push((pos * w).sin());
                    out.push((pos * w).cos());
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_token_is_all_zero_sin_unit_cos() {
        let pe = positional_encoding_2d(5, 4, 8).unwrap();
        // token (f=0, t=0) is the first d_model entries
        for pair in pe[..8].chunks(2) {
            assert_eq!(pair[0], 0.0);
            assert_eq!(pair[1], 1.0);
        }
    }

    #[test]
    fn halves_encode_their_own_axis() {
        let d = 8;
        let pe = positional_encoding_2d(6, 5, d).unwrap();
        let tok = |f: usize, t: usize| &pe[(t * 6 + f) * d..(t * 6 + f + 1) * d];
        // same f, different t: first half identical, second differs
        assert_eq!(tok(2, 0)[..4], tok(2, 3)[..4]);
        assert_ne!(tok(2, 0)[4..], tok(2, 3)[4..]);
        // same t, different f: second half identical, first differs
        assert_eq!(tok(1, 2)[4..], tok(4, 2)[4..]);
        assert_ne!(tok(1, 2)[..4], tok(4, 2)[..4]);
    }

    #[test]
    fn no_collisions_on_the_full_grid() {
        let (n_c, n_s, d) = (48, 36, 64);
        let pe = positional_encoding_2d(n_c, n_s, d).unwrap();
        let toks: Vec<&[f64]> = pe.chunks(d).collect();
        for i in 0..toks.len() {
            for j in (i + 1)..toks.len() {
                assert_ne!(toks[i], toks[j], "tokens {i} and {j} collide");
            }
        }
    }

    #[test]
    fn deterministic_across_calls() {
        let a = positional_encoding_2d(12, 12, 32).unwrap();
        let b = positional_encoding_2d(12, 12, 32).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_indivisible_d_model() {
        assert!(positional_encoding_2d(4, 4, 6).is_err());
    }
}
