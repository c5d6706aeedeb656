//! CSV/JSON emission with enough metadata to reproduce every number, and
//! a lossless CSV parse for downstream tooling.

use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::mc::{BerCurve, BerPoint};
use crate::{HarnessError, Result};

/// One CSV row: a single (Eb/N0 point, seed) cell plus the curve-level
/// metadata repeated so each row is self-describing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CsvRow {
    pub receiver: String,
    pub n_ap: usize,
    /// pilot columns joined with `|`
    pub pilot_cols: String,
    pub uncoded: bool,
    /// hex FNV-1a of the canonical config
    pub config_hash: String,
    pub ebn0_db: f64,
    pub seed: u64,
    pub ber: f64,
    pub mean_ber: f64,
    pub smoothed_ber: f64,
    pub point_bits: u64,
    pub point_errors: u64,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn emit_csv(curve: &BerCurve, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(file);
    let pilot_cols = curve
        .pilot_cols
        .iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join("|");
    for p in &curve.points {
        for (&seed, &ber) in curve.seeds.iter().zip(&p.per_seed) {
            w.serialize(CsvRow {
                receiver: curve.receiver.clone(),
                n_ap: curve.n_ap,
                pilot_cols: pilot_cols.clone(),
                uncoded: curve.uncoded,
                config_hash: format!("{:016x}", curve.config_hash),
                ebn0_db: p.ebn0_db,
                seed,
                ber,
                mean_ber: p.mean,
                smoothed_ber: p.smoothed,
                point_bits: p.bits,
                point_errors: p.errors,
            })
            .map_err(|e| HarnessError::Csv(e.to_string()))?;
        }
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// Rebuild a curve from its CSV. Inverse of [`emit_csv`] up to float
/// formatting (exact for the default serializer, which is lossless).
pub fn parse_csv(path: &Path) -> Result<BerCurve> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut r = csv::Reader::from_reader(file);
    let rows: Vec<CsvRow> = r
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| HarnessError::Csv(e.to_string()))?;
    let first = rows
        .first()
        .ok_or_else(|| HarnessError::Csv("empty CSV".into()))?
        .clone();
    let pilot_cols = if first.pilot_cols.is_empty() {
        vec![]
    } else {
        first
            .pilot_cols
            .split('|')
            .map(|s| s.parse().map_err(|_| HarnessError::Csv("bad pilot col".into())))
            .collect::<Result<_>>()?
    };
    let config_hash = u64::from_str_radix(&first.config_hash, 16)
        .map_err(|_| HarnessError::Csv("bad config hash".into()))?;
    let mut seeds = Vec::new();
    for row in &rows {
        if row.ebn0_db != first.ebn0_db {
            break;
        }
        seeds.push(row.seed);
    }
    let mut points: Vec<BerPoint> = Vec::new();
    for chunk in rows.chunks(seeds.len()) {
        points.push(BerPoint {
            ebn0_db: chunk[0].ebn0_db,
            per_seed: chunk.iter().map(|r| r.ber).collect(),
            mean: chunk[0].mean_ber,
            smoothed: chunk[0].smoothed_ber,
            bits: chunk[0].point_bits,
            errors: chunk[0].point_errors,
        });
    }
    Ok(BerCurve {
        receiver: first.receiver,
        n_ap: first.n_ap,
        pilot_cols,
        uncoded: first.uncoded,
        seeds,
        config_hash,
        points,
    })
}

/// Run-level manifest written next to the data files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub receiver: String,
    pub seeds: Vec<u64>,
    pub outputs: Vec<String>,
}

pub fn write_manifest(manifest: &Manifest, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    serde_json::to_writer_pretty(file, manifest)
        .map_err(|e| HarnessError::Csv(e.to_string()))?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let file = File::open(path).map_err(io_err(path))?;
    serde_json::from_reader(file).map_err(|e| HarnessError::Csv(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_curve() -> BerCurve {
        BerCurve {
            receiver: "ls".into(),
            n_ap: 2,
            pilot_cols: vec![2, 9],
            uncoded: false,
            seeds: vec![1, 2, 3],
            config_hash: 0xdead_beef_cafe_f00d,
            points: vec![
                BerPoint {
                    ebn0_db: 0.0,
                    per_seed: vec![0.11, 0.12, 0.13],
                    mean: 0.12,
                    smoothed: 0.118,
                    bits: 3000,
                    errors: 360,
                },
                BerPoint {
                    ebn0_db: 2.0,
                    per_seed: vec![0.02, 0.025, 0.021],
                    mean: 0.022,
                    smoothed: 0.023,
                    bits: 3000,
                    errors: 66,
                },
            ],
        }
    }

    #[test]
    fn csv_roundtrip_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("curve.csv");
        let curve = sample_curve();
        emit_csv(&curve, &path).unwrap();
        let back = parse_csv(&path).unwrap();
        assert_eq!(back, curve);
    }

    #[test]
    fn identical_curves_write_identical_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let (p1, p2) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
        emit_csv(&sample_curve(), &p1).unwrap();
        emit_csv(&sample_curve(), &p2).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn manifest_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        let m = Manifest {
            config_hash: "0123456789abcdef".into(),
            receiver: "lmmse".into(),
            seeds: vec![1, 2],
            outputs: vec!["curve.csv".into()],
        };
        write_manifest(&m, &path).unwrap();
        let back = read_manifest(&path).unwrap();
        assert_eq!(back.config_hash, m.config_hash);
        assert_eq!(back.seeds, m.seeds);
        assert_eq!(back.outputs, m.outputs);
    }

    #[test]
    fn empty_csv_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        std::fs::write(&path, "receiver,n_ap\n").unwrap();
        assert!(parse_csv(&path).is_err());
    }
}
