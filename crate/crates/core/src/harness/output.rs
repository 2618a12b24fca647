//! CSV and JSON writers. Every file is written to a temporary sibling and
//! renamed into place, so readers never observe a partial file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

use super::metrics::MetricsSeries;
use super::scenario::RunOutput;
use super::sweep::{SummaryRow, SweepRun};

pub const METRICS_FILE: &str = "metrics.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const EVENTS_FILE: &str = "events.csv";
pub const REPUTATION_FILE: &str = "reputation.csv";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const SWEEP_SUMMARY_FILE: &str = "sweep_summary.csv";

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = PathBuf::from(path);
    let name = path
        .file_name()
        .map(|n| format!(".{}.tmp", n.to_string_lossy()))
        .unwrap_or_else(|| ".tmp".to_string());
    tmp.set_file_name(name);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn csv_bytes<T: Serialize>(header: &[&str], rows: impl IntoIterator<Item = T>) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.into_inner().map_err(|e| Error::Csv(e.into_error().into()))
}

pub fn metrics_csv(series: &MetricsSeries) -> Result<Vec<u8>> {
    csv_bytes(
        &[
            "epoch",
            "avg_rho_honest",
            "avg_rho_attackers",
            "epoch_duration_rounds",
            "pct_users_selected_mhs",
            "detector_flags",
            "reports_accepted",
            "reports_rejected",
        ],
        &series.records,
    )
}

pub fn summary_json(series: &MetricsSeries) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(&series.summary())?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn write_metrics(dir: &Path, series: &MetricsSeries) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_atomic(&dir.join(METRICS_FILE), &metrics_csv(series)?)?;
    write_atomic(&dir.join(SUMMARY_FILE), &summary_json(series)?)
}

#[derive(Serialize)]
struct EventRow {
    round: u64,
    area: u32,
    mhs_id: u32,
    neighbor_id: u32,
    fabricated: bool,
}

/// Writes metrics and summary plus whichever detail tables were recorded.
pub fn write_run(dir: &Path, out: &RunOutput) -> Result<()> {
    write_metrics(dir, &out.series)?;
    if !out.events.is_empty() {
        let rows = out.events.iter().map(|e| EventRow {
            round: e.round,
            area: e.area.0,
            mhs_id: e.mhs.0,
            neighbor_id: e.neighbor.0,
            fabricated: e.fabricated,
        });
        let bytes = csv_bytes(&["round", "area", "mhs_id", "neighbor_id", "fabricated"], rows)?;
        write_atomic(&dir.join(EVENTS_FILE), &bytes)?;
    }
    if !out.reputation.is_empty() {
        let bytes = csv_bytes(
            &["epoch", "user_id", "b", "d", "u", "rho", "verdict", "accepted"],
            &out.reputation,
        )?;
        write_atomic(&dir.join(REPUTATION_FILE), &bytes)?;
    }
    if !out.trajectory.is_empty() {
        let bytes = csv_bytes(&["time_s", "user_id", "x_m", "y_m"], &out.trajectory)?;
        write_atomic(&dir.join(TRAJECTORY_FILE), &bytes)?;
    }
    Ok(())
}

/// One row per (value, metric): mean, 95% half-width and every replicate.
pub fn sweep_summary_csv(axis: &str, rows: &[SummaryRow]) -> Result<Vec<u8>> {
    let replicates = rows.iter().map(|r| r.replicates.len()).max().unwrap_or(0);
    let mut header = vec![
        axis.to_string(),
        "metric".into(),
        "n".into(),
        "mean".into(),
        "ci95_half_width".into(),
    ];
    header.extend((0..replicates).map(|i| format!("rep_{i}")));

    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(&header)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        let mut rec = vec![
            r.value.to_string(),
            r.metric.clone(),
            r.n.to_string(),
            opt(r.mean),
            opt(r.ci95_half_width),
        ];
        rec.extend(r.replicates.iter().map(|v| opt(*v)));
        rec.resize(header.len(), String::new());
        w.write_record(&rec)?;
    }
    w.into_inner().map_err(|e| Error::Csv(e.into_error().into()))
}

pub fn write_sweep_summary(dir: &Path, axis: &str, rows: &[SummaryRow]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_atomic(&dir.join(SWEEP_SUMMARY_FILE), &sweep_summary_csv(axis, rows)?)
}

/// Per-run outputs under `<dir>/<axis>=<value>/rep_<i>/`, plus the combined table.
pub fn write_sweep(dir: &Path, axis: &str, runs: &[SweepRun], summary: &[SummaryRow]) -> Result<()> {
    for run in runs {
        let run_dir = dir
            .join(format!("{axis}={}", run.value))
            .join(format!("rep_{}", run.replicate));
        write_metrics(&run_dir, &run.series)?;
    }
    write_sweep_summary(dir, axis, summary)
}
