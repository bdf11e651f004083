use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Scheme};
use crate::error::Result;

pub const CSV_HEADER: [&str; 7] = ["sweep_value", "scheme", "gain", "accuracy", "se", "iters", "seconds"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    /// `None` when the experiment has no sweep axis.
    pub sweep_value: Option<f64>,
    pub scheme: Scheme,
    pub gain: f64,
    pub accuracy: f64,
    pub se: f64,
    pub iters: usize,
    pub seconds: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub rows: Vec<ReportRow>,
}

impl ExperimentReport {
    /// Rows of one scheme in sweep order.
    pub fn scheme_rows(&self, scheme: Scheme) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(move |r| r.scheme == scheme)
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Long-format CSV, one row per (sweep value, scheme).
pub fn write_csv<W: Write>(report: &ExperimentReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in &report.rows {
        w.write_record([
            opt(r.sweep_value),
            r.scheme.name().to_string(),
            r.gain.to_string(),
            r.accuracy.to_string(),
            r.se.to_string(),
            r.iters.to_string(),
            opt(r.seconds),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `<stem>.csv` and `<stem>.json`; returns both paths.
pub fn emit_report(report: &ExperimentReport, stem: &Path) -> Result<(PathBuf, PathBuf)> {
    if let Some(dir) = stem.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let csv_path = stem.with_extension("csv");
    let json_path = stem.with_extension("json");
    write_csv(report, BufWriter::new(File::create(&csv_path)?))?;
    let mut json = BufWriter::new(File::create(&json_path)?);
    serde_json::to_writer_pretty(&mut json, report)?;
    json.write_all(b"\n")?;
    json.flush()?;
    Ok((csv_path, json_path))
}
