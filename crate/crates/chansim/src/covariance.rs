//! Second-order channel statistics over the resource grid.
//!
//! Two routes to the same pair of matrices: the closed form implied by the
//! tap model, and an empirical estimate from Monte Carlo channel draws
//! (with a sample-count guard and a PSD repair step). Both expose
//! `R_pp` (pilot x pilot) and `R_all,p` (every RE x pilot), the inputs the
//! LMMSE estimator consumes.
//!
//! RE ordering: the "all" axis uses grid storage order (`t * n_c + f`);
//! the pilot axis follows `PilotMask::pilot_positions`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use mrx_phy::PilotMask;

use crate::tdl::{generate_channel, TdlChannelSpec};
use crate::{ChanError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceModel {
    pub n_c: usize,
    pub n_s: usize,
    /// pilot x pilot covariance, Hermitian PSD
    pub r_pp: DMatrix<Complex64>,
    /// all-RE x pilot cross-covariance
    pub r_all_p: DMatrix<Complex64>,
}

/// `E[H(f1,t1) H*(f2,t2)]` under the tap model: separable in frequency
/// (steering phases) and time (AR(1) decay), summed over taps.
fn pair_corr(spec: &TdlChannelSpec, a: (usize, usize), b: (usize, usize)) -> Complex64 {
    let dt = (a.1 as i64 - b.1 as i64).unsigned_abs() as i32;
    let df = a.0 as f64 - b.0 as f64;
    let time = spec.rho.powi(dt);
    let mut acc = Complex64::default();
    for (&tau, &p) in spec.delays.iter().zip(&spec.powers) {
        let phase = -2.0 * std::f64::consts::PI * df * tau;
        acc += p * Complex64::from_polar(1.0, phase);
    }
    acc * time
}

fn grid_positions(n_c: usize, n_s: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(n_c * n_s);
    for t in 0..n_s {
        for f in 0..n_c {
            out.push((f, t));
        }
    }
    out
}

/// Exact covariance implied by the tap model.
pub fn analytic_covariance(spec: &TdlChannelSpec, mask: &PilotMask) -> CovarianceModel {
    let pilots = mask.pilot_positions();
    let all = grid_positions(mask.n_c, mask.n_s);
    let r_pp = DMatrix::from_fn(pilots.len(), pilots.len(), |i, j| {
        pair_corr(spec, pilots[i], pilots[j])
    });
    let r_all_p = DMatrix::from_fn(all.len(), pilots.len(), |i, j| {
        pair_corr(spec, all[i], pilots[j])
    });
    CovarianceModel {
        n_c: mask.n_c,
        n_s: mask.n_s,
        r_pp,
        r_all_p,
    }
}

/// Clip negative eigenvalues of a Hermitian matrix to zero, working in the
/// real embedding `[[Re, -Im], [Im, Re]]` so a real symmetric eigensolver
/// applies.
fn psd_project(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = m.nrows();
    let mut emb = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let v = m[(i, j)];
            emb[(i, j)] = v.re;
            emb[(i, j + n)] = -v.im;
            emb[(i + n, j)] = v.im;
            emb[(i + n, j + n)] = v.re;
        }
    }
    // exact symmetry helps the solver; the embedding of a Hermitian matrix
    // is symmetric up to rounding
    let emb = (&emb + emb.transpose()) * 0.5;
    let se = emb.symmetric_eigen();
    let lam = se.eigenvalues.map(|x| x.max(0.0));
    let rep = &se.eigenvectors * DMatrix::from_diagonal(&lam) * se.eigenvectors.transpose();
    DMatrix::from_fn(n, n, |i, j| {
        Complex64::new(
            (rep[(i, j)] + rep[(i + n, j + n)]) * 0.5,
            (rep[(i + n, j)] - rep[(i, j + n)]) * 0.5,
        )
    })
}

/// Sample-average covariance from fresh channel draws. Requires at least
/// ten samples per dimension of the full grid vector; `r_pp` is
/// symmetrized and projected back onto the PSD cone before use.
pub fn empirical_covariance<R: Rng>(
    spec: &TdlChannelSpec,
    mask: &PilotMask,
    n_samples: usize,
    rng: &mut R,
) -> Result<CovarianceModel> {
    let dim = mask.n_c * mask.n_s;
    let need = 10 * dim;
    if n_samples < need {
        return Err(ChanError::InsufficientSamples {
            need,
            got: n_samples,
        });
    }
    let pilots = mask.pilot_positions();
    let p = pilots.len();
    let mut r_pp = DMatrix::<Complex64>::zeros(p, p);
    let mut r_all_p = DMatrix::<Complex64>::zeros(dim, p);
    for _ in 0..n_samples {
        let h = generate_channel(spec, mask.n_c, mask.n_s, rng);
        let hp: Vec<Complex64> = pilots.iter().map(|&(f, t)| h.at(f, t)).collect();
        for j in 0..p {
            let cj = hp[j].conj();
            for i in 0..p {
                r_pp[(i, j)] += hp[i] * cj;
            }
            for (i, &hv) in h.raw().iter().enumerate() {
                r_all_p[(i, j)] += hv * cj;
            }
        }
    }
    let scale = 1.0 / n_samples as f64;
    r_pp *= Complex64::new(scale, 0.0);
    r_all_p *= Complex64::new(scale, 0.0);
    let herm = DMatrix::from_fn(p, p, |i, j| (r_pp[(i, j)] + r_pp[(j, i)].conj()) * 0.5);
    Ok(CovarianceModel {
        n_c: mask.n_c,
        n_s: mask.n_s,
        r_pp: psd_project(&herm),
        r_all_p,
    })
}

/// Canonical parameter string identifying a (tap model, pilot layout)
/// pair; stored in the cache file and checked on load.
pub fn cache_key(spec: &TdlChannelSpec, mask: &PilotMask) -> String {
    let taps: Vec<String> = spec
        .delays
        .iter()
        .zip(&spec.powers)
        .map(|(d, p)| format!("{d:.12e}:{p:.12e}"))
        .collect();
    format!(
        "v1;rho={:.12e};taps={};grid={}x{};pilot_cols={:?}",
        spec.rho,
        taps.join(","),
        mask.n_c,
        mask.n_s,
        mask.pilot_cols
    )
}

const CACHE_MAGIC: &[u8; 4] = b"MRXC";

fn write_matrix<W: Write>(w: &mut W, m: &DMatrix<Complex64>) -> std::io::Result<()> {
    w.write_u32::<LittleEndian>(m.nrows() as u32)?;
    w.write_u32::<LittleEndian>(m.ncols() as u32)?;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            w.write_f64::<LittleEndian>(m[(i, j)].re)?;
            w.write_f64::<LittleEndian>(m[(i, j)].im)?;
        }
    }
    Ok(())
}

fn read_matrix<R: Read>(r: &mut R) -> std::io::Result<DMatrix<Complex64>> {
    let rows = r.read_u32::<LittleEndian>()? as usize;
    let cols = r.read_u32::<LittleEndian>()? as usize;
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        let re = r.read_f64::<LittleEndian>()?;
        let im = r.read_f64::<LittleEndian>()?;
        data.push(Complex64::new(re, im));
    }
    Ok(DMatrix::from_vec(rows, cols, data))
}

pub fn save_cache(path: &Path, key: &str, model: &CovarianceModel) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(CACHE_MAGIC)?;
    w.write_u32::<LittleEndian>(key.len() as u32)?;
    w.write_all(key.as_bytes())?;
    w.write_u32::<LittleEndian>(model.n_c as u32)?;
    w.write_u32::<LittleEndian>(model.n_s as u32)?;
    write_matrix(&mut w, &model.r_pp)?;
    write_matrix(&mut w, &model.r_all_p)?;
    Ok(())
}

/// Load a cached model; fails if the stored key differs from `key` so a
/// stale cache can never silently serve a different configuration.
pub fn load_cache(path: &Path, key: &str) -> Result<CovarianceModel> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != CACHE_MAGIC {
        return Err(ChanError::BadCache("bad magic".into()));
    }
    let klen = r.read_u32::<LittleEndian>()? as usize;
    let mut kbuf = vec![0u8; klen];
    r.read_exact(&mut kbuf)?;
    let stored = String::from_utf8(kbuf).map_err(|_| ChanError::BadCache("non-utf8 key".into()))?;
    if stored != key {
        return Err(ChanError::BadCache(format!(
            "key mismatch: cached for {stored:?}"
        )));
    }
    let n_c = r.read_u32::<LittleEndian>()? as usize;
    let n_s = r.read_u32::<LittleEndian>()? as usize;
    let r_pp = read_matrix(&mut r)?;
    let r_all_p = read_matrix(&mut r)?;
    Ok(CovarianceModel {
        n_c,
        n_s,
        r_pp,
        r_all_p,
    })
}
