use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const RESULT_HEADER: &str =
    "algorithm,seed,instance_index,windowed_rmse,network_size,cumulative_drifts,elapsed_ns";

/// One progress report for one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub algorithm: String,
    pub seed: u64,
    /// Instances processed so far.
    pub instance_index: u64,
    pub windowed_rmse: f64,
    pub network_size: usize,
    pub cumulative_drifts: usize,
    /// Wall time since the seed started; 0 unless timing is enabled.
    pub elapsed_ns: u64,
}

/// A network evolution, as written to the drift log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftRecord {
    pub algorithm: String,
    pub seed: u64,
    pub instance_index: u64,
}

/// Writes rows sorted by `(seed, instance_index)`.
pub fn write_results<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut sorted: Vec<&ResultRow> = rows.iter().collect();
    sorted.sort_by_key(|r| (r.seed, r.instance_index));
    let mut w = csv::Writer::from_writer(out);
    for row in sorted {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io("<results>", e))?;
    Ok(())
}

/// Writes rows to `path`; with no rows, only the header is written.
pub fn emit_csv(rows: &[ResultRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    if rows.is_empty() {
        writeln!(file, "{RESULT_HEADER}").map_err(|e| Error::io(path, e))?;
        return Ok(());
    }
    write_results(rows, file)
}

pub fn read_results<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut reader = csv::Reader::from_reader(input);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != RESULT_HEADER {
        return Err(Error::Format(format!("unexpected results header {:?}", header.join(","))));
    }
    reader.deserialize().map(|r| r.map_err(Error::from)).collect()
}

pub fn read_results_csv(path: impl AsRef<Path>) -> Result<Vec<ResultRow>> {
    let path = path.as_ref();
    read_results(File::open(path).map_err(|e| Error::io(path, e))?)
}

pub fn write_drift_log(records: &[DriftRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    w.write_record(["algorithm", "seed", "instance_index"])?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Final windowed RMSE across seeds for one algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub algorithm: String,
    pub n_seeds: usize,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single seed.
    pub stdev: f64,
    pub mean_drifts: f64,
}

impl Summary {
    pub fn line(&self) -> String {
        format!(
            "{}: final windowed RMSE {:.6} ± {:.6} over {} seed(s), {:.2} drifts per seed",
            self.algorithm, self.mean, self.stdev, self.n_seeds, self.mean_drifts
        )
    }
}

pub fn summarize(rows: &[ResultRow]) -> Vec<Summary> {
    // Last row per (algorithm, seed).
    let mut finals: BTreeMap<&str, BTreeMap<u64, &ResultRow>> = BTreeMap::new();
    for row in rows {
        let slot = finals.entry(&row.algorithm).or_default().entry(row.seed).or_insert(row);
        if row.instance_index >= slot.instance_index {
            *slot = row;
        }
    }
    finals
        .into_iter()
        .map(|(algorithm, per_seed)| {
            let vals: Vec<f64> = per_seed.values().map(|r| r.windowed_rmse).collect();
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let stdev = if vals.len() > 1 {
                (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            let mean_drifts = per_seed.values().map(|r| r.cumulative_drifts as f64).sum::<f64>() / n;
            Summary {
                algorithm: algorithm.to_string(),
                n_seeds: vals.len(),
                mean,
                stdev,
                mean_drifts,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(seed: u64, idx: u64, rmse: f64) -> ResultRow {
        ResultRow {
            algorithm: "sfnr_adwin".into(),
            seed,
            instance_index: idx,
            windowed_rmse: rmse,
            network_size: 3,
            cumulative_drifts: 2,
            elapsed_ns: 0,
        }
    }

    #[test]
    fn header_and_sorting() {
        let rows = vec![row(1, 10, 0.5), row(0, 20, 0.25), row(0, 10, 0.125)];
        let mut buf = Vec::new();
        write_results(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], RESULT_HEADER);
        assert_eq!(lines[1], "sfnr_adwin,0,10,0.125,3,2,0");
        assert_eq!(lines[3], "sfnr_adwin,1,10,0.5,3,2,0");
    }

    #[test]
    fn round_trip_is_exact() {
        let rows = vec![row(0, 1, 0.1 + 0.2), row(0, 2, 1e-300), row(1, 1, 123456.789)];
        let mut buf = Vec::new();
        write_results(&rows, &mut buf).unwrap();
        assert_eq!(read_results(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn empty_file_has_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        emit_csv(&[], &p).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap().trim(), RESULT_HEADER);
        assert!(read_results_csv(&p).unwrap().is_empty());
    }

    #[test]
    fn summary_uses_final_rows() {
        let rows = vec![row(0, 10, 9.0), row(0, 20, 1.0), row(1, 20, 3.0)];
        let s = summarize(&rows);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].mean, 2.0);
        assert!((s[0].stdev - 2f64.sqrt()).abs() < 1e-15);
    }
}
