//! Resource grids, pilot masks and LLR grids.
//!
//! Storage is symbol-major (`[t][f]`), matching the data fill order:
//! subcarrier-major within each OFDM symbol, symbols left to right.

use num_complex::Complex64;

use crate::{PhyError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridRole {
    Transmitted,
    Channel,
    Received,
    Estimate,
}

#[derive(Debug, Clone)]
pub struct ResourceGrid {
    pub n_c: usize,
    pub n_s: usize,
    pub role: GridRole,
    data: Vec<Complex64>,
}

impl ResourceGrid {
    pub fn zero(n_c: usize, n_s: usize, role: GridRole) -> Self {
        ResourceGrid {
            n_c,
            n_s,
            role,
            data: vec![Complex64::default(); n_c * n_s],
        }
    }

    pub fn from_fn(n_c: usize, n_s: usize, role: GridRole, f: impl Fn(usize, usize) -> Complex64) -> Self {
        let mut g = Self::zero(n_c, n_s, role);
        for t in 0..n_s {
            for fc in 0..n_c {
                *g.at_mut(fc, t) = f(fc, t);
            }
        }
        g
    }

    #[inline]
    pub fn at(&self, f: usize, t: usize) -> Complex64 {
        self.data[t * self.n_c + f]
    }

    #[inline]
    pub fn at_mut(&mut self, f: usize, t: usize) -> &mut Complex64 {
        &mut self.data[t * self.n_c + f]
    }

    pub fn raw(&self) -> &[Complex64] {
        &self.data
    }

    pub fn raw_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn same_dims(&self, other: &ResourceGrid) -> bool {
        self.n_c == other.n_c && self.n_s == other.n_s
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum()
    }
}

/// Boolean pilot layout shared by all APs, with known unit-modulus pilot
/// values. The supported layouts are full pilot columns.
#[derive(Debug, Clone)]
pub struct PilotMask {
    pub n_c: usize,
    pub n_s: usize,
    pub pilot_cols: Vec<usize>,
    /// `values[ci * n_c + f]` is the pilot at subcarrier `f` of the
    /// `ci`-th pilot column
    values: Vec<Complex64>,
}

impl PilotMask {
    /// Pilot columns with deterministic unit-modulus QPSK values.
    pub fn columns(n_c: usize, n_s: usize, cols: &[usize]) -> Result<Self> {
        let mut pilot_cols = cols.to_vec();
        pilot_cols.sort_unstable();
        pilot_cols.dedup();
        if pilot_cols.iter().any(|&c| c >= n_s) {
            return Err(PhyError::Shape(format!(
                "pilot column out of range for {n_s} symbols: {pilot_cols:?}"
            )));
        }
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut values = Vec::with_capacity(pilot_cols.len() * n_c);
        // small deterministic LCG so pilot phases vary across the grid
        let mut state = 0x2545_f491_4f6c_dd1du64;
        for _ci in 0..pilot_cols.len() {
            for _f in 0..n_c {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let quad = (state >> 60) & 3;
                let (re, im) = match quad {
                    0 => (s, s),
                    1 => (-s, s),
                    2 => (-s, -s),
                    _ => (s, -s),
                };
                values.push(Complex64::new(re, im));
            }
        }
        Ok(PilotMask {
            n_c,
            n_s,
            pilot_cols,
            values,
        })
    }

    #[inline]
    pub fn is_pilot(&self, _f: usize, t: usize) -> bool {
        self.pilot_cols.contains(&t)
    }

    pub fn pilot_value(&self, f: usize, t: usize) -> Option<Complex64> {
        self.pilot_cols
            .iter()
            .position(|&c| c == t)
            .map(|ci| self.values[ci * self.n_c + f])
    }

    pub fn pilot_re_count(&self) -> usize {
        self.pilot_cols.len() * self.n_c
    }

    pub fn data_re_count(&self) -> usize {
        self.n_c * self.n_s - self.pilot_re_count()
    }

    /// Data-RE positions in fill order: symbols left to right, subcarriers
    /// ascending within a symbol.
    pub fn data_positions(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.data_re_count());
        for t in 0..self.n_s {
            if self.pilot_cols.contains(&t) {
                continue;
            }
            for f in 0..self.n_c {
                out.push((f, t));
            }
        }
        out
    }

    /// Pilot-RE positions in the same traversal order.
    pub fn pilot_positions(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.pilot_re_count());
        for &t in &self.pilot_cols {
            for f in 0..self.n_c {
                out.push((f, t));
            }
        }
        out
    }

    /// CSV dump of the boolean layout (1 = pilot).
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for f in 0..self.n_c {
            let row: Vec<&str> = (0..self.n_s)
                .map(|t| if self.is_pilot(f, t) { "1" } else { "0" })
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Arrange data symbols on the grid and place pilots per the mask.
pub fn grid_assemble(symbols: &[Complex64], mask: &PilotMask) -> Result<ResourceGrid> {
    if symbols.len() != mask.data_re_count() {
        return Err(PhyError::Length {
            what: "grid_assemble symbols",
            expected: mask.data_re_count(),
            got: symbols.len(),
        });
    }
    let mut grid = ResourceGrid::zero(mask.n_c, mask.n_s, GridRole::Transmitted);
    for ((f, t), &s) in mask.data_positions().iter().zip(symbols) {
        *grid.at_mut(*f, *t) = s;
    }
    for (f, t) in mask.pilot_positions() {
        *grid.at_mut(f, t) = mask.pilot_value(f, t).unwrap();
    }
    Ok(grid)
}

/// Inverse of [`grid_assemble`]: pull data-RE symbols in fill order.
pub fn grid_extract_data(grid: &ResourceGrid, mask: &PilotMask) -> Result<Vec<Complex64>> {
    if grid.n_c != mask.n_c || grid.n_s != mask.n_s {
        return Err(PhyError::Shape(format!(
            "grid {}x{} vs mask {}x{}",
            grid.n_c, grid.n_s, mask.n_c, mask.n_s
        )));
    }
    Ok(mask
        .data_positions()
        .iter()
        .map(|&(f, t)| grid.at(f, t))
        .collect())
}

/// Per-data-RE bit LLRs; pilot REs carry no entries.
#[derive(Debug, Clone)]
pub struct LlrGrid {
    pub n_c: usize,
    pub n_s: usize,
    pub m: usize,
    /// data-RE LLRs in fill order, `m` per RE
    pub llrs: Vec<f64>,
}

impl LlrGrid {
    pub fn new(mask: &PilotMask, m: usize, llrs: Vec<f64>) -> Result<Self> {
        if llrs.len() != mask.data_re_count() * m {
            return Err(PhyError::Length {
                what: "llr grid",
                expected: mask.data_re_count() * m,
                got: llrs.len(),
            });
        }
        Ok(LlrGrid {
            n_c: mask.n_c,
            n_s: mask.n_s,
            m,
            llrs,
        })
    }

    pub fn clamp(&mut self, limit: f64) {
        for l in &mut self.llrs {
            *l = l.clamp(-limit, limit);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_grid_capacity() {
        // 48x36 with 2 pilot columns -> 1632 data REs -> 9792 coded bits
        let mask = PilotMask::columns(48, 36, &[2, 32]).unwrap();
        assert_eq!(mask.data_re_count(), 48 * 34);
        assert_eq!(mask.data_re_count(), 1632);
        assert_eq!(mask.data_re_count() * 6, 9792);
    }

    #[test]
    fn assemble_extract_roundtrip() {
        let mask = PilotMask::columns(8, 6, &[1, 4]).unwrap();
        let symbols: Vec<Complex64> = (0..mask.data_re_count())
            .map(|i| Complex64::new(i as f64, -(i as f64)))
            .collect();
        let grid = grid_assemble(&symbols, &mask).unwrap();
        let back = grid_extract_data(&grid, &mask).unwrap();
        assert_eq!(back, symbols);
    }

    #[test]
    fn all_pilot_mask_has_no_data() {
        let mask = PilotMask::columns(4, 2, &[0, 1]).unwrap();
        assert_eq!(mask.data_re_count(), 0);
        let grid = grid_assemble(&[], &mask).unwrap();
        for (f, t) in mask.pilot_positions() {
            assert_eq!(grid.at(f, t), mask.pilot_value(f, t).unwrap());
            assert!((grid.at(f, t).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fill_order_matches_independent_enumeration() {
        // independent index enumeration: all (f,t) pairs with t not a pilot
        // column, ordered by (t, f)
        let mask = PilotMask::columns(5, 7, &[2]).unwrap();
        let mut expect = Vec::new();
        for t in 0..7 {
            for f in 0..5 {
                if t != 2 {
                    expect.push((f, t));
                }
            }
        }
        assert_eq!(mask.data_positions(), expect);
    }

    #[test]
    fn count_mismatch_rejected() {
        let mask = PilotMask::columns(4, 4, &[0]).unwrap();
        assert!(grid_assemble(&[Complex64::default(); 3], &mask).is_err());
    }

    #[test]
    fn pilot_sparsity_capacity_gain() {
        let two = PilotMask::columns(48, 36, &[2, 32]).unwrap();
        let one = PilotMask::columns(48, 36, &[2]).unwrap();
        let frac2 = two.data_re_count() as f64 / (48.0 * 36.0);
        let frac1 = one.data_re_count() as f64 / (48.0 * 36.0);
        assert!((frac2 - 34.0 / 36.0).abs() < 1e-12);
        assert!((frac1 - 35.0 / 36.0).abs() < 1e-12);
        // relative gain ~ 2.94%
        assert!(((frac1 / frac2 - 1.0) * 100.0 - 2.94).abs() < 0.01);
    }
}
