//! Experiment reports and their on-disk form.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use statrs::statistics::{Data, Distribution, OrderStatistics};

use super::{Cell, ExperimentConfig};
use crate::error::Result;
use crate::rng::{StreamSeed, GENERATOR};

/// Bumped whenever a field of the report or the CSV header changes.
pub const FORMAT_VERSION: u32 = 1;
pub const REPORT_FILE: &str = "report.json";
pub const RECORDS_FILE: &str = "records.csv";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportStatus {
    Clean,
    /// Some trials failed; the rest are valid.
    Partial,
    /// Every trial failed.
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub cell: u32,
    pub trial: u32,
    pub seed: StreamSeed,
    /// Channel uses spent by this trial, over all channels involved.
    pub queries: u64,
    pub estimate: Option<f64>,
    pub error: Option<f64>,
    /// Error of the naive comparator (plug-in entropy, distinct count).
    pub baseline_error: Option<f64>,
    /// Whether the trial met its target; `None` when undefined (a test on a
    /// channel strictly between uniform and ε-far).
    pub success: Option<bool>,
    pub reject: Option<bool>,
    pub failure: Option<String>,
    pub wall_time_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell: Cell,
    pub trials: u32,
    pub failures: u32,
    pub total_queries: u64,
    /// Per-trial queries, median over successful trials.
    pub queries_median: Option<f64>,
    pub error_median: Option<f64>,
    pub error_q1: Option<f64>,
    pub error_q3: Option<f64>,
    pub error_mean: Option<f64>,
    pub baseline_error_median: Option<f64>,
    /// Fraction of scored trials that met their target.
    pub success_rate: Option<f64>,
    pub rejection_rate: Option<f64>,
}

impl CellSummary {
    fn new(cell: Cell, records: &[&TrialRecord]) -> Self {
        let ok: Vec<&&TrialRecord> = records.iter().filter(|r| r.failure.is_none()).collect();
        let values = |f: fn(&TrialRecord) -> Option<f64>| -> Option<Data<Vec<f64>>> {
            let v: Vec<f64> = ok.iter().filter_map(|r| f(r)).collect();
            (!v.is_empty()).then(|| Data::new(v))
        };
        let mut errors = values(|r| r.error);
        let rate = |f: fn(&TrialRecord) -> Option<bool>| -> Option<f64> {
            let v: Vec<bool> = ok.iter().filter_map(|r| f(r)).collect();
            (!v.is_empty()).then(|| v.iter().filter(|&&b| b).count() as f64 / v.len() as f64)
        };
        Self {
            cell,
            trials: records.len() as u32,
            failures: (records.len() - ok.len()) as u32,
            total_queries: records.iter().map(|r| r.queries).sum(),
            queries_median: values(|r| Some(r.queries as f64)).map(|mut d| d.median()),
            error_median: errors.as_mut().map(|d| d.median()),
            error_q1: errors.as_mut().map(|d| d.lower_quartile()),
            error_q3: errors.as_mut().map(|d| d.upper_quartile()),
            error_mean: errors.as_ref().and_then(|d| d.mean()),
            baseline_error_median: values(|r| r.baseline_error).map(|mut d| d.median()),
            success_rate: rate(|r| r.success),
            rejection_rate: rate(|r| r.reject),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub format_version: u32,
    pub tool_version: String,
    pub generator: String,
    pub config: ExperimentConfig,
    pub status: ReportStatus,
    pub total_queries: u64,
    pub cells: Vec<CellSummary>,
    pub records: Vec<TrialRecord>,
    pub wall_time_ms: f64,
}

impl ExperimentReport {
    pub(super) fn assemble(
        config: ExperimentConfig,
        cells: Vec<Cell>,
        records: Vec<TrialRecord>,
        wall_time_ms: f64,
    ) -> Self {
        let failures = records.iter().filter(|r| r.failure.is_some()).count();
        let status = match failures {
            0 => ReportStatus::Clean,
            f if f == records.len() => ReportStatus::Failed,
            _ => ReportStatus::Partial,
        };
        let summaries = cells
            .into_iter()
            .map(|cell| {
                let mine: Vec<&TrialRecord> = records.iter().filter(|r| r.cell == cell.index).collect();
                CellSummary::new(cell, &mine)
            })
            .collect();
        Self {
            format_version: FORMAT_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            generator: GENERATOR.to_string(),
            config,
            status,
            total_queries: records.iter().map(|r| r.queries).sum(),
            cells: summaries,
            records,
            wall_time_ms,
        }
    }

    /// Copy with every timing field zeroed; the rest is reproducible.
    pub fn without_timing(mut self) -> Self {
        self.wall_time_ms = 0.0;
        for r in &mut self.records {
            r.wall_time_ms = 0.0;
        }
        self
    }

    pub fn csv_rows(&self) -> Vec<CsvRow> {
        self.records
            .iter()
            .map(|r| {
                let cell = &self.cells[r.cell as usize].cell;
                CsvRow {
                    format_version: FORMAT_VERSION,
                    cell: r.cell,
                    trial: r.trial,
                    master_seed: r.seed.master,
                    stream: r.seed.stream,
                    channel: cell.channel.clone(),
                    partner: cell.partner.clone(),
                    p: cell.p.map(|p| p.to_string()),
                    n: cell.n,
                    epsilon: cell.epsilon,
                    delta: cell.delta,
                    queries: r.queries,
                    estimate: r.estimate,
                    error: r.error,
                    baseline_error: r.baseline_error,
                    success: r.success,
                    reject: r.reject,
                    failure: r.failure.clone(),
                    wall_time_ms: r.wall_time_ms,
                }
            })
            .collect()
    }
}

/// One line of `records.csv`. The header is the field list, in order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub format_version: u32,
    pub cell: u32,
    pub trial: u32,
    pub master_seed: u64,
    pub stream: u64,
    pub channel: String,
    pub partner: Option<String>,
    pub p: Option<String>,
    pub n: usize,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub queries: u64,
    pub estimate: Option<f64>,
    pub error: Option<f64>,
    pub baseline_error: Option<f64>,
    pub success: Option<bool>,
    pub reject: Option<bool>,
    pub failure: Option<String>,
    pub wall_time_ms: f64,
}

/// Writes `report.json` and `records.csv` into `dir`, creating it if needed.
pub fn write_outputs(report: &ExperimentReport, dir: impl AsRef<Path>) -> Result<(PathBuf, PathBuf)> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let json_path = dir.join(REPORT_FILE);
    let mut json = BufWriter::new(File::create(&json_path)?);
    serde_json::to_writer_pretty(&mut json, report)?;
    json.write_all(b"\n")?;
    json.flush()?;

    let csv_path = dir.join(RECORDS_FILE);
    let mut csv = csv::Writer::from_path(&csv_path)?;
    for row in report.csv_rows() {
        csv.serialize(row)?;
    }
    csv.flush()?;
    Ok((json_path, csv_path))
}
