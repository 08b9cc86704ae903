//! Files written by the CLI and the parsers that read them back.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use booom::engine::{RunTrace, StopReason, TraceRecord};
use booom::format::{parse_matrix, write_matrix};
use booom::metrics::MetricReport;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::statistics::{Data, OrderStatistics, Statistics};

use crate::error::CliError;

pub fn write_trace(path: &Path, trace: &RunTrace) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(&format!("cannot create {}", path.display()), e))?;
    let mut out = BufWriter::new(file);
    for record in &trace.records {
        serde_json::to_writer(&mut out, record).map_err(|e| CliError::Runtime(e.to_string()))?;
        out.write_all(b"\n").map_err(|e| CliError::io("trace write", e))?;
    }
    out.flush().map_err(|e| CliError::io("trace write", e))
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRecord>, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(&format!("cannot open {}", path.display()), e))?;
    let mut records = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CliError::io("trace read", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line)
            .map_err(|e| CliError::Input(format!("{} line {}: {e}", path.display(), n + 1)))?;
        records.push(record);
    }
    Ok(records)
}

pub fn write_matrix_file(path: &Path, m: &DMatrix<f64>) -> Result<(), CliError> {
    std::fs::write(path, write_matrix(m)).map_err(|e| CliError::io(&format!("cannot write {}", path.display()), e))
}

pub fn read_matrix_file(path: &Path) -> Result<DMatrix<f64>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    parse_matrix(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn write_labels(path: &Path, y: &[u8]) -> Result<(), CliError> {
    let text: String = y.iter().map(|v| format!("{v}\n")).collect();
    std::fs::write(path, text).map_err(|e| CliError::io(&format!("cannot write {}", path.display()), e))
}

/// One 0/1 label per non-empty line.
pub fn read_labels(path: &Path) -> Result<Vec<u8>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| match l.trim() {
            "0" => Ok(0),
            "1" => Ok(1),
            other => Err(CliError::Input(format!("{} line {}: label '{other}' is not 0 or 1", path.display(), n + 1))),
        })
        .collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| CliError::io(&format!("cannot write {}", path.display()), e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Outcome of one optimization, as written to `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub objective: String,
    pub p: usize,
    pub d: usize,
    pub replicate: usize,
    pub seed: u64,
    pub f_best: f64,
    pub runs: usize,
    pub evaluations: usize,
    pub failed_evaluations: usize,
    pub repairs: usize,
    pub max_drift: f64,
    pub wall_seconds: f64,
    pub stop_reason: StopReason,
    pub metrics: Vec<MetricReport>,
}

/// Location and spread of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub min: f64,
    pub mean: f64,
    /// Standard error of the mean (sample standard deviation over sqrt(n)); 0 for n = 1.
    pub stderr: f64,
    pub median: f64,
    /// Upper minus lower quartile.
    pub iqr: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.mean();
        let stderr = if values.len() > 1 { values.std_dev() / n.sqrt() } else { 0.0 };
        let mut data = Data::new(values.to_vec());
        Some(Self {
            min: values.min(),
            mean,
            stderr,
            median: data.median(),
            iqr: data.interquartile_range(),
        })
    }
}

/// A bench CSV row: per-replicate rows fill the first block of columns, the
/// aggregate row (replicate = "aggregate") the second.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub kind: String,
    pub replicate: String,
    pub f_best: Option<f64>,
    pub evaluations: Option<usize>,
    pub seconds: Option<f64>,
    pub min: Option<f64>,
    pub mean: Option<f64>,
    pub stderr: Option<f64>,
    pub median: Option<f64>,
    pub iqr: Option<f64>,
    pub mean_time: Option<f64>,
    pub time_stderr: Option<f64>,
}

pub const BENCH_HEADER: &str = "kind,replicate,f_best,evaluations,seconds,min,mean,stderr,median,iqr,mean_time,time_stderr";

impl BenchRow {
    pub fn replicate(kind: &str, replicate: usize, f_best: f64, evaluations: usize, seconds: f64) -> Self {
        Self {
            kind: kind.into(),
            replicate: replicate.to_string(),
            f_best: Some(f_best),
            evaluations: Some(evaluations),
            seconds: Some(seconds),
            min: None,
            mean: None,
            stderr: None,
            median: None,
            iqr: None,
            mean_time: None,
            time_stderr: None,
        }
    }

    pub fn aggregate(kind: &str, values: &Stats, times: &Stats) -> Self {
        Self {
            kind: kind.into(),
            replicate: "aggregate".into(),
            f_best: None,
            evaluations: None,
            seconds: None,
            min: Some(values.min),
            mean: Some(values.mean),
            stderr: Some(values.stderr),
            median: Some(values.median),
            iqr: Some(values.iqr),
            mean_time: Some(times.mean),
            time_stderr: Some(times.stderr),
        }
    }

    pub fn is_aggregate(&self) -> bool {
        self.replicate == "aggregate"
    }
}

/// Writes serializable rows as CSV (with header) or JSON lines.
pub fn write_rows<T: Serialize>(path: &Path, rows: &[T], jsonl: bool) -> Result<(), CliError> {
    let err = |e: &dyn std::fmt::Display| CliError::Runtime(format!("cannot write {}: {e}", path.display()));
    if jsonl {
        let file = File::create(path).map_err(|e| err(&e))?;
        let mut out = BufWriter::new(file);
        for row in rows {
            serde_json::to_writer(&mut out, row).map_err(|e| err(&e))?;
            out.write_all(b"\n").map_err(|e| err(&e))?;
        }
        out.flush().map_err(|e| err(&e))
    } else {
        let mut w = csv::Writer::from_path(path).map_err(|e| err(&e))?;
        for row in rows {
            w.serialize(row).map_err(|e| err(&e))?;
        }
        w.flush().map_err(|e| err(&e))
    }
}

pub fn read_csv_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    r.deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}
