use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::thread;

use log::{info, warn};
use loadcycle_core::sim::{compare_runs, ComparisonReport};
use loadcycle_core::{run_cycle, CycleRun, Metrics, RunConfig, RunError};
use thiserror::Error;

use crate::config::{load_config, LoadError, ResolvedConfig};
use crate::output::{self, COMPARISON_FILE, DUTY_FILE, FAULT_FILE, METRICS_FILE};

/// Failure of a command; [`CliError::exit_code`] is the process exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("simulation fault: {0}")]
    Fault(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Fault(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    fn io(what: &str, path: &Path, e: io::Error) -> Self {
        CliError::Io(format!("{what} {}: {e}", path.display()))
    }
}

impl From<LoadError> for CliError {
    fn from(e: LoadError) -> Self {
        match e {
            LoadError::Io { .. } => CliError::Io(e.to_string()),
            LoadError::Syntax { .. } => CliError::Config(e.to_string()),
            LoadError::Invalid(inner) => CliError::Config(inner.to_string()),
        }
    }
}

fn load(path: &Path) -> Result<ResolvedConfig, CliError> {
    let resolved = load_config(path)?;
    for key in &resolved.defaulted {
        info!("{}: {key} not set, using the reference value", path.display());
    }
    Ok(resolved)
}

/// Creates `dir` and removes `stale` files a previous run may have left.
fn prepare_dir(dir: &Path, stale: &[&str]) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io("cannot create", dir, e))?;
    for name in stale {
        match fs::remove_file(dir.join(name)) {
            Err(e) if e.kind() != io::ErrorKind::NotFound => return Err(CliError::io("cannot clear", dir, e)),
            _ => {}
        }
    }
    Ok(())
}

/// Runs one cycle and writes its bundle into `dir`. A fault still writes the
/// partial telemetry, flagged by a fault marker file.
fn run_leg(cfg: &RunConfig, dir: &Path, name: &str) -> Result<CycleRun, CliError> {
    info!("{name}: simulating");
    match run_cycle(cfg) {
        Ok(run) => {
            output::write_bundle(dir, &run.log, &run.metrics, cfg).map_err(|e| CliError::io("cannot write", dir, e))?;
            info!("{name}: cycle time {:.3} s, fuel {:.2} g", run.metrics.cycle_time, run.metrics.fuel_total);
            Ok(run)
        }
        Err(RunError::Config(e)) => Err(CliError::Config(e.to_string())),
        Err(RunError::Fault { fault, log }) => {
            warn!("{name}: {fault}; writing {} partial rows", log.len());
            output::write_partial(dir, &log, cfg, &fault).map_err(|e| CliError::io("cannot write", dir, e))?;
            Err(CliError::Fault(format!("{name}: {fault}")))
        }
    }
}

pub fn cmd_run(config: &Path, out_dir: &Path) -> Result<Metrics, CliError> {
    let resolved = load(config)?;
    prepare_dir(out_dir, &[FAULT_FILE, METRICS_FILE])?;
    run_leg(&resolved.config, out_dir, &config.display().to_string()).map(|run| run.metrics)
}

/// Subdirectories that hold the two legs of a comparison.
pub const COMPARE_LEGS: [&str; 2] = ["a", "b"];

pub fn cmd_compare(config_a: &Path, config_b: &Path, out_dir: &Path) -> Result<ComparisonReport, CliError> {
    let configs = [load(config_a)?.config, load(config_b)?.config];
    let dirs: Vec<PathBuf> = COMPARE_LEGS.iter().map(|leg| out_dir.join(leg)).collect();
    prepare_dir(out_dir, &[FAULT_FILE, COMPARISON_FILE, DUTY_FILE])?;
    for dir in &dirs {
        prepare_dir(dir, &[FAULT_FILE, METRICS_FILE])?;
    }

    let [a, b] = thread::scope(|s| {
        let legs: Vec<_> = configs
            .iter()
            .zip(&dirs)
            .zip(COMPARE_LEGS)
            .map(|((cfg, dir), name)| s.spawn(move || run_leg(cfg, dir, name)))
            .collect();
        legs.into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(CliError::Fault("simulation thread panicked".into()))))
            .collect::<Vec<_>>()
            .try_into()
            .unwrap_or_else(|_| unreachable!("two legs"))
    });

    match (a, b) {
        (Ok(a), Ok(b)) => {
            let report = compare_runs(&a.metrics, &b.metrics);
            let runs = [(COMPARE_LEGS[0], &a.log, &a.metrics), (COMPARE_LEGS[1], &b.log, &b.metrics)];
            output::write_comparison(out_dir, &report, runs).map_err(|e| CliError::io("cannot write", out_dir, e))?;
            Ok(report)
        }
        (a, b) => {
            let errors: Vec<CliError> = [a.err(), b.err()].into_iter().flatten().collect();
            let failed: Vec<String> = errors.iter().map(ToString::to_string).collect();
            let marker = serde_json::json!({ "complete": false, "errors": failed });
            output::write_json(&out_dir.join(FAULT_FILE), &marker)
                .map_err(|e| CliError::io("cannot write", out_dir, e))?;
            let worst = errors.into_iter().max_by_key(CliError::exit_code);
            Err(worst.unwrap_or_else(|| unreachable!("at least one leg failed")))
        }
    }
}

pub fn cmd_validate(config: &Path) -> Result<ResolvedConfig, CliError> {
    load(config)
}
