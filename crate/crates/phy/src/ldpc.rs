//! Quasi-cyclic LDPC codes: systematic encoder and normalized min-sum
//! belief-propagation decoder.
//!
//! Codewords are `[info | parity]`. The encoder is built once per code by
//! Gauss-Jordan elimination over GF(2) of the parity submatrix (the last
//! `n-k` columns of H), which also verifies full row rank.

use crate::{PhyError, Result};

#[derive(Debug, Clone)]
pub struct CodeConfig {
    pub n: usize,
    pub k: usize,
    pub max_iters: usize,
    pub norm_factor: f64,
    pub llr_clamp: f64,
    /// per-check variable indices
    pub checks: Vec<Vec<usize>>,
    /// parity rows over the info bits: parity[r] = <enc[r], info> over GF(2)
    enc: Vec<Vec<u64>>,
}

#[derive(Debug, Clone)]
pub struct DecodeResult {
    pub info_bits: Vec<u8>,
    pub codeword: Vec<u8>,
    pub converged: bool,
    pub iterations: usize,
}

impl CodeConfig {
    /// Build a code from its parity-check support (per-check variable
    /// indices). The last `n-k` columns must form an invertible submatrix.
    pub fn from_checks(n: usize, checks: Vec<Vec<usize>>) -> Result<Self> {
        let r = checks.len();
        if r >= n {
            return Err(PhyError::Shape(format!("{r} checks for {n} variables")));
        }
        let k = n - r;
        let enc = build_encoder(n, k, &checks)?;
        Ok(CodeConfig {
            n,
            k,
            max_iters: 25,
            norm_factor: 0.8,
            llr_clamp: 20.0,
            checks,
            enc,
        })
    }

    /// Expand a quasi-cyclic base matrix (entries: shift value, or negative
    /// for an empty block) with lifting factor `z`.
    pub fn from_qc_base(base: &[Vec<i32>], z: usize) -> Result<Self> {
        let brr = base.len();
        let bc = base[0].len();
        let n = bc * z;
        let mut checks = vec![Vec::new(); brr * z];
        for (bi, row) in base.iter().enumerate() {
            if row.len() != bc {
                return Err(PhyError::Shape("ragged base matrix".into()));
            }
            for (bj, &s) in row.iter().enumerate() {
                if s < 0 {
                    continue;
                }
                let s = s as usize % z;
                for a in 0..z {
                    checks[bi * z + a].push(bj * z + (a + s) % z);
                }
            }
        }
        for row in &mut checks {
            row.sort_unstable();
        }
        CodeConfig::from_checks(n, checks)
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    /// `H c^T = 0` over GF(2)?
    pub fn parity_ok(&self, codeword: &[u8]) -> bool {
        self.checks
            .iter()
            .all(|row| row.iter().map(|&v| codeword[v] as u32).sum::<u32>() % 2 == 0)
    }

    /// Systematic encoding: output `[info | parity]` satisfying all checks.
    pub fn encode(&self, info: &[u8]) -> Result<Vec<u8>> {
        if info.len() != self.k {
            return Err(PhyError::Length {
                what: "ldpc_encode info",
                expected: self.k,
                got: info.len(),
            });
        }
        let words = pack_bits(info);
        let mut cw = Vec::with_capacity(self.n);
        cw.extend_from_slice(info);
        for row in &self.enc {
            let mut acc = 0u64;
            for (w, &iw) in row.iter().zip(&words) {
                acc ^= w & iw;
            }
            cw.push((acc.count_ones() & 1) as u8);
        }
        Ok(cw)
    }

    /// Normalized min-sum decoding. Input LLRs use the `log p(1)/p(0)`
    /// convention. Convergence requires the hard decision to satisfy all
    /// checks with strictly nonzero posteriors (an all-zero input is a
    /// complete erasure and never converges).
    pub fn decode(&self, llrs: &[f64]) -> Result<DecodeResult> {
        if llrs.len() != self.n {
            return Err(PhyError::Length {
                what: "ldpc_decode llrs",
                expected: self.n,
                got: llrs.len(),
            });
        }
        if llrs.iter().any(|l| !l.is_finite()) {
            return Err(PhyError::Shape("non-finite LLR input".into()));
        }
        // internal convention: lambda = log p(0)/p(1), bit = (lambda < 0)
        let lambda: Vec<f64> = llrs
            .iter()
            .map(|&l| (-l).clamp(-self.llr_clamp, self.llr_clamp))
            .collect();
        let mut v2c: Vec<Vec<f64>> = self
            .checks
            .iter()
            .map(|row| row.iter().map(|&v| lambda[v]).collect())
            .collect();
        let mut c2v: Vec<Vec<f64>> = self.checks.iter().map(|row| vec![0.0; row.len()]).collect();
        let mut posterior = lambda.clone();

        for iter in 1..=self.max_iters {
            // check-node update: normalized min-sum
            for (ci, row) in self.checks.iter().enumerate() {
                let msgs = &v2c[ci];
                let mut sign = 1.0f64;
                let mut min1 = f64::INFINITY;
                let mut min2 = f64::INFINITY;
                let mut argmin = 0;
                for (e, &m) in msgs.iter().enumerate() {
                    if m < 0.0 {
                        sign = -sign;
                    }
                    let mag = m.abs();
                    if mag < min1 {
                        min2 = min1;
                        min1 = mag;
                        argmin = e;
                    } else if mag < min2 {
                        min2 = mag;
                    }
                }
                for e in 0..row.len() {
                    let m = msgs[e];
                    let s = if m < 0.0 { -sign } else { sign };
                    let mag = if e == argmin { min2 } else { min1 };
                    c2v[ci][e] = self.norm_factor * s * mag;
                }
            }
            // variable-node update
            posterior.copy_from_slice(&lambda);
            for (ci, row) in self.checks.iter().enumerate() {
                for (e, &v) in row.iter().enumerate() {
                    posterior[v] += c2v[ci][e];
                }
            }
            for (ci, row) in self.checks.iter().enumerate() {
                for (e, &v) in row.iter().enumerate() {
                    v2c[ci][e] = (posterior[v] - c2v[ci][e]).clamp(-self.llr_clamp, self.llr_clamp);
                }
            }
            let hard: Vec<u8> = posterior.iter().map(|&p| (p < 0.0) as u8).collect();
            if posterior.iter().all(|&p| p != 0.0) && self.parity_ok(&hard) {
                return Ok(DecodeResult {
                    info_bits: hard[..self.k].to_vec(),
                    codeword: hard,
                    converged: true,
                    iterations: iter,
                });
            }
        }
        let hard: Vec<u8> = posterior.iter().map(|&p| (p < 0.0) as u8).collect();
        Ok(DecodeResult {
            info_bits: hard[..self.k].to_vec(),
            codeword: hard,
            converged: false,
            iterations: self.max_iters,
        })
    }
}

fn pack_bits(bits: &[u8]) -> Vec<u64> {
    let mut words = vec![0u64; bits.len().div_ceil(64)];
    for (i, &b) in bits.iter().enumerate() {
        if b & 1 == 1 {
            words[i / 64] |= 1u64 << (i % 64);
        }
    }
    words
}

/// Gauss-Jordan over GF(2) on `[H_par | H_info]`, returning
/// `H_par^{-1} H_info` row bitsets (width k).
fn build_encoder(n: usize, k: usize, checks: &[Vec<usize>]) -> Result<Vec<Vec<u64>>> {
    let r = n - k;
    let par_words = r.div_ceil(64);
    let info_words = k.div_ceil(64);
    // row layout: [parity part | info part]
    let mut par: Vec<Vec<u64>> = vec![vec![0u64; par_words]; r];
    let mut info: Vec<Vec<u64>> = vec![vec![0u64; info_words]; r];
    for (ci, row) in checks.iter().enumerate() {
        for &v in row {
            if v >= n {
                return Err(PhyError::Shape(format!("variable index {v} out of {n}")));
            }
            if v < k {
                info[ci][v / 64] ^= 1u64 << (v % 64);
            } else {
                let p = v - k;
                par[ci][p / 64] ^= 1u64 << (p % 64);
            }
        }
    }
    for col in 0..r {
        let (w, b) = (col / 64, col % 64);
        let pivot = (col..r).find(|&i| par[i][w] >> b & 1 == 1).ok_or(PhyError::SingularParity)?;
        par.swap(col, pivot);
        info.swap(col, pivot);
        for i in 0..r {
            if i != col && par[i][w] >> b & 1 == 1 {
                let (pc, ic) = (par[col].clone(), info[col].clone());
                for (d, s) in par[i].iter_mut().zip(&pc) {
                    *d ^= s;
                }
                for (d, s) in info[i].iter_mut().zip(&ic) {
                    *d ^= s;
                }
            }
        }
    }
    Ok(info)
}

/// IEEE 802.11n rate-3/4, n = 648 quasi-cyclic code (Z = 27).
pub fn wifi_648_rate34() -> CodeConfig {
    const E: i32 = -1;
    let base: Vec<Vec<i32>> = vec![
        vec![16, 17, 22, 24, 9, 3, 14, E, 4, 2, 7, E, 26, E, 2, E, 21, E, 1, 0, E, E, E, E],
        vec![25, 12, 12, 3, 3, 26, 6, 21, E, 15, 22, E, 15, E, 4, E, E, 16, E, 0, 0, E, E, E],
        vec![25, 18, 26, 16, 22, 23, 9, E, 0, E, 4, E, 4, E, 8, 23, 11, E, E, E, 0, 0, E, E],
        vec![9, 7, 0, 1, 17, E, E, 7, 3, E, 3, 23, E, 16, E, E, 21, E, 0, E, E, 0, 0, E],
        vec![24, 5, 26, 7, 1, E, E, 15, 24, 15, E, 8, E, 13, E, 13, E, 11, E, E, E, E, 0, 0],
        vec![2, 2, 19, 14, 24, 1, 15, 19, E, 21, E, 2, E, 24, E, 3, E, 2, 1, E, E, E, E, 0],
    ];
    CodeConfig::from_qc_base(&base, 27).expect("built-in 802.11n base matrix must expand")
}

/// Deterministic random quasi-cyclic code with a dual-diagonal parity part
/// (weight-3 information columns). Used for desk-scale configurations whose
/// grid capacity is smaller than one 648-bit codeword.
pub fn generate_qc(base_rows: usize, base_cols: usize, z: usize, seed: u64) -> Result<CodeConfig> {
    assert!(base_cols > base_rows && base_rows >= 3);
    for attempt in 0..16 {
        let mut state = seed
            .wrapping_add(attempt)
            .wrapping_mul(0x9e37_79b9_7f4a_7c15)
            | 1;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        let info_cols = base_cols - base_rows;
        let mut base = vec![vec![-1i32; base_cols]; base_rows];
        for j in 0..info_cols {
            let mut rows = Vec::new();
            while rows.len() < 3.min(base_rows) {
                let r = (next() % base_rows as u64) as usize;
                if !rows.contains(&r) {
                    rows.push(r);
                }
            }
            for r in rows {
                base[r][j] = (next() % z as u64) as i32;
            }
        }
        // dual-diagonal parity structure
        base[0][info_cols] = 1;
        base[base_rows / 2][info_cols] = 0;
        base[base_rows - 1][info_cols] = 1;
        for j in 1..base_rows {
            base[j - 1][info_cols + j] = 0;
            base[j][info_cols + j] = 0;
        }
        if let Ok(code) = CodeConfig::from_qc_base(&base, z) {
            return Ok(code);
        }
    }
    Err(PhyError::SingularParity)
}
