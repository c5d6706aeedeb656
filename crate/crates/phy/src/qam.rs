//! Gray-labeled square QAM with unit average energy.
//!
//! Label convention: for `m` bits per symbol, the first `m/2` bits select
//! the I level and the last `m/2` the Q level, each axis Gray-coded
//! (MSB first). Adjacent levels on an axis therefore differ in one bit.

use num_complex::Complex64;

use crate::{PhyError, Result};

#[derive(Debug, Clone)]
pub struct ConstellationSpec {
    /// modulation order M = 2^m
    pub order: usize,
    /// bits per symbol
    pub m: usize,
    /// constellation points indexed by bit label
    pub points: Vec<Complex64>,
    /// per-axis normalized PAM levels indexed by natural (sorted) position
    pub levels: Vec<f64>,
}

/// Gray code of a natural index.
#[inline]
pub fn gray(i: usize) -> usize {
    i ^ (i >> 1)
}

/// Inverse Gray code.
#[inline]
pub fn gray_inv(mut g: usize) -> usize {
    let mut i = 0;
    while g != 0 {
        i ^= g;
        g >>= 1;
    }
    i
}

impl ConstellationSpec {
    /// Square QAM with `m` bits per symbol (2 -> 4-QAM, 4 -> 16-QAM,
    /// 6 -> 64-QAM).
    pub fn square_qam(m: usize) -> Result<Self> {
        if m == 0 || m % 2 != 0 || m > 8 {
            return Err(PhyError::BadModulation(m));
        }
        let order = 1usize << m;
        let half = m / 2;
        let levels_per_axis = 1usize << half;
        // levels ±1, ±3, ... scaled to unit average symbol energy
        let norm = (2.0 * (order as f64 - 1.0) / 3.0).sqrt();
        let levels: Vec<f64> = (0..levels_per_axis)
            .map(|i| (2.0 * i as f64 - (levels_per_axis as f64 - 1.0)) / norm)
            .collect();
        let mut points = Vec::with_capacity(order);
        for label in 0..order {
            let i_bits = label >> half;
            let q_bits = label & (levels_per_axis - 1);
            let xi = levels[gray_inv(i_bits)];
            let xq = levels[gray_inv(q_bits)];
            points.push(Complex64::new(xi, xq));
        }
        Ok(ConstellationSpec {
            order,
            m,
            points,
            levels,
        })
    }

    /// Map a bit vector (length divisible by `m`) to complex symbols.
    pub fn map(&self, bits: &[u8]) -> Result<Vec<Complex64>> {
        if bits.len() % self.m != 0 {
            return Err(PhyError::Length {
                what: "qam_map bits",
                expected: (bits.len() / self.m + 1) * self.m,
                got: bits.len(),
            });
        }
        Ok(bits
            .chunks(self.m)
            .map(|chunk| {
                let mut label = 0usize;
                for &b in chunk {
                    label = (label << 1) | (b as usize & 1);
                }
                self.points[label]
            })
            .collect())
    }

    /// Nearest-point hard decision, returning the bit label (m bits,
    /// MSB first).
    pub fn hard_bits(&self, y: Complex64) -> Vec<u8> {
        let half = self.m / 2;
        let li = self.nearest_level(y.re);
        let lq = self.nearest_level(y.im);
        let label = (gray(li) << half) | gray(lq);
        (0..self.m)
            .map(|i| ((label >> (self.m - 1 - i)) & 1) as u8)
            .collect()
    }

    fn nearest_level(&self, x: f64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, &l) in self.levels.iter().enumerate() {
            let d = (x - l).abs();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// CSV dump: label bits, re, im.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,re,im\n");
        for (label, p) in self.points.iter().enumerate() {
            let bits: String = (0..self.m)
                .map(|i| {
                    if (label >> (self.m - 1 - i)) & 1 == 1 {
                        '1'
                    } else {
                        '0'
                    }
                })
                .collect();
            out.push_str(&format!("{bits},{},{}\n", p.re, p.im));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_average_energy() {
        for m in [2, 4, 6] {
            let spec = ConstellationSpec::square_qam(m).unwrap();
            let e: f64 = spec.points.iter().map(|p| p.norm_sqr()).sum::<f64>()
                / spec.order as f64;
            assert!((e - 1.0).abs() < 1e-12, "m={m}: energy {e}");
        }
    }

    #[test]
    fn map_demap_roundtrip_all_labels() {
        let spec = ConstellationSpec::square_qam(6).unwrap();
        for label in 0..64usize {
            let bits: Vec<u8> = (0..6).map(|i| ((label >> (5 - i)) & 1) as u8).collect();
            let sym = spec.map(&bits).unwrap()[0];
            assert_eq!(spec.hard_bits(sym), bits, "label {label}");
        }
    }

    #[test]
    fn four_qam_gray_quadrants() {
        // enumeration of the 4-point constellation: one bit per axis,
        // unit energy, Gray adjacency trivially satisfied per axis
        let spec = ConstellationSpec::square_qam(2).unwrap();
        let s = 1.0 / 2.0f64.sqrt();
        let cases = [
            ([0u8, 0u8], (-s, -s)),
            ([0, 1], (-s, s)),
            ([1, 1], (s, s)),
            ([1, 0], (s, -s)),
        ];
        for (bits, (re, im)) in cases {
            let p = spec.map(&bits).unwrap()[0];
            assert!((p.re - re).abs() < 1e-12 && (p.im - im).abs() < 1e-12);
            assert!((p.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gray_adjacency_per_axis() {
        let spec = ConstellationSpec::square_qam(6).unwrap();
        // walking the I levels in natural order flips exactly one bit
        for i in 0..spec.levels.len() - 1 {
            let diff = gray(i) ^ gray(i + 1);
            assert_eq!(diff.count_ones(), 1);
        }
    }

    #[test]
    fn length_error() {
        let spec = ConstellationSpec::square_qam(6).unwrap();
        assert!(spec.map(&[0, 1, 0]).is_err());
    }
}
