use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::Method;
use crate::error::invalid;
use crate::{Error, Result};

/// One Monte Carlo operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub method: Method,
    pub mo: usize,
    pub ibo_db: f64,
    pub snr_db: f64,
    /// Simulated blocks.
    pub trials: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub block_errors: u64,
    pub ser: f64,
    /// MSE of the first reconstruction output against the transmitted blocks.
    pub mse_coarse: f64,
    /// MSE after each fine iteration (proposed method only).
    pub mse_fine: Vec<f64>,
    pub pout_dbm: f64,
    pub pae: f64,
}

/// CSV column order, identical to the field order of [`SweepRecord`].
pub const CSV_HEADER: [&str; 13] = [
    "method",
    "mo",
    "ibo_db",
    "snr_db",
    "trials",
    "bit_errors",
    "ber",
    "block_errors",
    "ser",
    "mse_coarse",
    "mse_fine",
    "pout_dbm",
    "pae",
];

#[derive(Serialize, Deserialize)]
struct Row {
    method: Method,
    mo: usize,
    ibo_db: f64,
    snr_db: f64,
    trials: u64,
    bit_errors: u64,
    ber: f64,
    block_errors: u64,
    ser: f64,
    mse_coarse: f64,
    mse_fine: String,
    pout_dbm: f64,
    pae: f64,
}

impl From<&SweepRecord> for Row {
    fn from(r: &SweepRecord) -> Self {
        Row {
            method: r.method,
            mo: r.mo,
            ibo_db: r.ibo_db,
            snr_db: r.snr_db,
            trials: r.trials,
            bit_errors: r.bit_errors,
            ber: r.ber,
            block_errors: r.block_errors,
            ser: r.ser,
            mse_coarse: r.mse_coarse,
            mse_fine: r
                .mse_fine
                .iter()
                .map(f64::to_string)
                .collect::<Vec<_>>()
                .join(";"),
            pout_dbm: r.pout_dbm,
            pae: r.pae,
        }
    }
}

impl TryFrom<Row> for SweepRecord {
    type Error = Error;

    fn try_from(r: Row) -> Result<Self> {
        let mse_fine = if r.mse_fine.is_empty() {
            Vec::new()
        } else {
            r.mse_fine
                .split(';')
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|e| invalid(format!("mse_fine entry `{s}`: {e}")))
                })
                .collect::<Result<_>>()?
        };
        Ok(SweepRecord {
            method: r.method,
            mo: r.mo,
            ibo_db: r.ibo_db,
            snr_db: r.snr_db,
            trials: r.trials,
            bit_errors: r.bit_errors,
            ber: r.ber,
            block_errors: r.block_errors,
            ser: r.ser,
            mse_coarse: r.mse_coarse,
            mse_fine,
            pout_dbm: r.pout_dbm,
            pae: r.pae,
        })
    }
}

/// Writes records as CSV with the fixed header.
pub fn write_records<W: Write>(w: W, records: &[SweepRecord]) -> Result<()> {
    let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    wr.write_record(CSV_HEADER)?;
    for r in records {
        wr.serialize(Row::from(r))?;
    }
    wr.flush()?;
    Ok(())
}

pub fn records_to_csv(records: &[SweepRecord]) -> Result<String> {
    let mut buf = Vec::new();
    write_records(&mut buf, records)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

pub fn read_records<R: Read>(r: R) -> Result<Vec<SweepRecord>> {
    let mut rd = csv::Reader::from_reader(r);
    let header = rd.headers()?.clone();
    if !header.iter().eq(CSV_HEADER) {
        return Err(invalid(format!(
            "unexpected CSV header: {}",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    rd.deserialize::<Row>()
        .map(|row| SweepRecord::try_from(row?))
        .collect()
}

/// Path of the metadata sidecar next to a CSV file.
pub fn meta_path(csv: &Path) -> PathBuf {
    let mut name = csv.as_os_str().to_os_string();
    name.push(".meta");
    PathBuf::from(name)
}

/// The single sidecar line.
pub fn meta_line(config_hash: &str, seed: u64, extra: &str) -> String {
    if extra.is_empty() {
        format!("config_sha256={config_hash} seed={seed}\n")
    } else {
        format!("config_sha256={config_hash} seed={seed} {extra}\n")
    }
}

/// Writes `records` to `path` and the metadata line to `path.meta`.
pub fn write_output(
    path: &Path,
    records: &[SweepRecord],
    config_hash: &str,
    seed: u64,
    extra: &str,
) -> Result<()> {
    write_records(File::create(path)?, records)?;
    std::fs::write(meta_path(path), meta_line(config_hash, seed, extra))?;
    Ok(())
}

/// Parses `config_sha256` and `seed` back out of a sidecar file.
pub fn read_meta(path: &Path) -> Result<(String, u64)> {
    let mut line = String::new();
    BufReader::new(File::open(path)?).read_line(&mut line)?;
    let mut hash = None;
    let mut seed = None;
    for field in line.split_whitespace() {
        match field.split_once('=') {
            Some(("config_sha256", v)) => hash = Some(v.to_string()),
            Some(("seed", v)) => seed = v.parse().ok(),
            _ => {}
        }
    }
    match (hash, seed) {
        (Some(h), Some(s)) => Ok((h, s)),
        _ => Err(invalid(format!(
            "malformed metadata line in {}",
            path.display()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record() -> SweepRecord {
        SweepRecord {
            method: Method::PcBaseline,
            mo: 16,
            ibo_db: 8.0,
            snr_db: f64::INFINITY,
            trials: 1000,
            bit_errors: 12,
            ber: 0.003,
            block_errors: 10,
            ser: 0.01,
            mse_coarse: 1.5e-4,
            mse_fine: vec![1e-4, 9.5e-5],
            pout_dbm: 4.25,
            pae: 0.31,
        }
    }

    #[test]
    fn header_matches_field_order() {
        let csv = records_to_csv(&[record()]).unwrap();
        let first = csv.lines().next().unwrap();
        assert_eq!(
            first,
            "method,mo,ibo_db,snr_db,trials,bit_errors,ber,block_errors,ser,mse_coarse,mse_fine,pout_dbm,pae"
        );
        let row = csv.lines().nth(1).unwrap();
        assert!(row.starts_with("pc-baseline,16,8.0,inf,1000,12,"), "{row}");
    }

    #[test]
    fn csv_round_trip() {
        let mut empty = record();
        empty.mse_fine.clear();
        let recs = vec![record(), empty];
        let csv = records_to_csv(&recs).unwrap();
        assert_eq!(read_records(csv.as_bytes()).unwrap(), recs);
    }

    #[test]
    fn sidecar_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.csv");
        write_output(&path, &[record()], "abc123", 42, "axis=ibo").unwrap();
        assert_eq!(
            read_meta(&meta_path(&path)).unwrap(),
            ("abc123".to_string(), 42)
        );
        let back = read_records(File::open(&path).unwrap()).unwrap();
        assert_eq!(back.len(), 1);
    }

    #[test]
    fn wrong_header_is_rejected() {
        assert!(read_records("a,b\n1,2\n".as_bytes()).is_err());
    }
}
