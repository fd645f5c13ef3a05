//! Output bundle writers.
//!
//! Every number goes through [`fmt_num`] so that a rerun of the same build
//! reproduces the files byte for byte.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use loadcycle_core::error::SimFault;
use loadcycle_core::sim::{ComparisonReport, DutyPoint};
use loadcycle_core::{CycleLog, LogRow, Metrics, RunConfig};
use serde::Serialize;

pub const TELEMETRY_FILE: &str = "telemetry.csv";
pub const METRICS_FILE: &str = "metrics.json";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const DUTY_FILE: &str = "duty.csv";
pub const COMPARISON_FILE: &str = "comparison.json";
/// Present only next to outputs cut short by a simulation fault.
pub const FAULT_FILE: &str = "fault.json";

/// Telemetry columns that are not plain numbers.
pub const LABEL_COLUMNS: [&str; 4] = ["t", "phase", "gear_cmd", "gear"];

/// 17 significant digits: enough to round-trip any f64.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn telemetry_header() -> Vec<&'static str> {
    LABEL_COLUMNS.iter().chain(LogRow::NUMERIC_COLUMNS.iter()).copied().collect()
}

fn finish<W: Write>(w: csv::Writer<W>) -> io::Result<()> {
    w.into_inner().map_err(|e| e.into_error())?.flush()
}

pub fn write_telemetry<W: Write>(out: W, log: &CycleLog) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(telemetry_header())?;
    for r in &log.rows {
        let mut record = vec![fmt_num(r.t), r.phase.to_string(), r.command.gear.to_string(), r.gear.to_string()];
        record.extend(r.numeric_values().into_iter().map(fmt_num));
        w.write_record(&record)?;
    }
    finish(w)
}

/// Cutting-edge markers every `marker_interval` of simulated time.
pub fn write_trajectory<W: Write>(out: W, log: &CycleLog, cfg: &RunConfig) -> io::Result<()> {
    let every = cfg.sim.marker_stride() as u64 * u64::from(cfg.sim.log_decimation);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "phase", "edge_x", "edge_z", "edge_angle"])?;
    for r in log.rows.iter().filter(|r| r.step % every == 0) {
        w.write_record([fmt_num(r.t), r.phase.to_string(), fmt_num(r.edge_x), fmt_num(r.edge_z), fmt_num(r.edge_angle)])?;
    }
    finish(w)
}

/// Normalized engine operating points, one per log row. With `tag` set, a
/// leading `run` column names the run so several runs can share a file.
pub fn write_duty<W: Write>(out: W, runs: &[(Option<&str>, &CycleLog, &[DutyPoint])]) -> io::Result<()> {
    let tagged = runs.iter().any(|(tag, ..)| tag.is_some());
    let mut w = csv::Writer::from_writer(out);
    let header = ["t", "phase", "speed_norm", "torque_norm"];
    if tagged {
        w.write_record(std::iter::once("run").chain(header))?;
    } else {
        w.write_record(header)?;
    }
    for (tag, log, duty) in runs {
        for (r, d) in log.rows.iter().zip(duty.iter()) {
            let mut record = Vec::with_capacity(5);
            if tagged {
                record.push(tag.unwrap_or_default().to_string());
            }
            record.extend([fmt_num(r.t), d.phase.to_string(), fmt_num(d.speed), fmt_num(d.torque)]);
            w.write_record(&record)?;
        }
    }
    finish(w)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()
}

/// Writes telemetry, metrics, trajectory and duty files into `dir`.
pub fn write_bundle(dir: &Path, log: &CycleLog, metrics: &Metrics, cfg: &RunConfig) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    write_telemetry(BufWriter::new(File::create(dir.join(TELEMETRY_FILE))?), log)?;
    write_trajectory(BufWriter::new(File::create(dir.join(TRAJECTORY_FILE))?), log, cfg)?;
    write_duty(BufWriter::new(File::create(dir.join(DUTY_FILE))?), &[(None, log, &metrics.duty_points)])?;
    write_json(&dir.join(METRICS_FILE), metrics)
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct FaultReport {
    pub message: String,
    pub kind: String,
    pub phase: String,
    pub step: u64,
    pub t: f64,
    /// Log rows written before the fault.
    pub rows: usize,
}

/// Writes what a faulted run produced, plus the marker file that flags it as
/// partial.
pub fn write_partial(dir: &Path, log: &CycleLog, cfg: &RunConfig, fault: &SimFault) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    write_telemetry(BufWriter::new(File::create(dir.join(TELEMETRY_FILE))?), log)?;
    write_trajectory(BufWriter::new(File::create(dir.join(TRAJECTORY_FILE))?), log, cfg)?;
    let report = FaultReport {
        message: fault.to_string(),
        kind: fault.kind.to_string(),
        phase: fault.phase.to_string(),
        step: fault.step,
        t: fault.t,
        rows: log.len(),
    };
    write_json(&dir.join(FAULT_FILE), &report)
}

/// Comparison report plus the duty points of both runs in one file.
pub fn write_comparison(
    dir: &Path,
    report: &ComparisonReport,
    runs: [(&str, &CycleLog, &Metrics); 2],
) -> io::Result<()> {
    write_json(&dir.join(COMPARISON_FILE), report)?;
    let merged: Vec<_> = runs.iter().map(|(tag, log, m)| (Some(*tag), *log, m.duty_points.as_slice())).collect();
    write_duty(BufWriter::new(File::create(dir.join(DUTY_FILE))?), &merged)
}
