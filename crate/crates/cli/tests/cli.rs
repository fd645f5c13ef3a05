use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use loadcycle_cli::output::{FaultReport, LABEL_COLUMNS};
use loadcycle_core::sim::ComparisonReport;
use loadcycle_core::{run_cycle, Metrics, RunConfig};
use serde_json::{json, Value};
use tempfile::TempDir;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn loadcycle(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_loadcycle")).args(args).output().expect("binary runs")
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_config(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(v).unwrap()).unwrap();
    path
}

fn reference_value() -> Value {
    serde_json::to_value(RunConfig::reference()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn shipped_reference_matches_builtin() {
    let r = loadcycle_cli::load_config(&configs().join("reference.json")).unwrap();
    assert_eq!(r.config, RunConfig::reference());
    assert!(r.defaulted.is_empty(), "{:?}", r.defaulted);

    let weak = loadcycle_cli::load_config(&configs().join("weak_converter.json")).unwrap();
    assert_eq!(weak.config, RunConfig::reference().with_converter_scale(0.8));
}

#[test]
fn run_writes_the_bundle() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let o = loadcycle(&["run", arg(&configs().join("reference.json")), "-o", arg(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in ["telemetry.csv", "metrics.json", "trajectory.csv", "duty.csv"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    assert!(!out.join("fault.json").exists());

    let text = fs::read_to_string(out.join("metrics.json")).unwrap();
    let metrics: Metrics = serde_json::from_str(&text).unwrap();
    assert_eq!(metrics, run_cycle(&RunConfig::reference()).unwrap().metrics);
    assert_eq!(serde_json::to_string_pretty(&metrics).unwrap() + "\n", text);

    let telemetry = fs::read_to_string(out.join("telemetry.csv")).unwrap();
    let duty = fs::read_to_string(out.join("duty.csv")).unwrap();
    assert_eq!(telemetry.lines().count(), duty.lines().count());
    assert_eq!(telemetry.lines().count(), metrics.duty_points.len() + 1);
}

#[test]
fn trajectory_markers_follow_marker_interval() {
    let tmp = TempDir::new().unwrap();
    let o = loadcycle(&["run", arg(&configs().join("reference.json")), "-o", arg(tmp.path())]);
    assert_eq!(o.status.code(), Some(0));
    let mut rdr = csv::Reader::from_path(tmp.path().join("trajectory.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["t", "phase", "edge_x", "edge_z", "edge_angle"]);
    let times: Vec<f64> = rdr.records().map(|r| r.unwrap()[0].parse().unwrap()).collect();
    let interval = RunConfig::reference().sim.marker_interval;
    assert!(times.len() > 10);
    for (i, t) in times.iter().enumerate() {
        assert!((t - i as f64 * interval).abs() < 1e-9, "marker {i} at {t}");
    }
}

/// Each group is one kind of plot a user will want to draw from a run.
#[test]
fn telemetry_header_covers_plotted_quantities() {
    let tmp = TempDir::new().unwrap();
    let o = loadcycle(&["run", arg(&configs().join("reference.json")), "-o", arg(tmp.path())]);
    assert_eq!(o.status.code(), Some(0));
    let mut rdr = csv::Reader::from_path(tmp.path().join("telemetry.csv")).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    let checklist: [(&str, &[&str]); 5] = [
        ("edge trajectory", &["t", "edge_x", "edge_z", "edge_angle"]),
        ("operator input", &["throttle", "brake", "steer", "lift_cmd", "tilt_cmd", "gear_cmd", "phase"]),
        ("power split", &["p_engine", "p_driveline", "p_hydraulics", "p_loss"]),
        ("load duty", &["omega_engine", "engine_torque"]),
        ("bucket filling", &["bearing", "slope", "attack", "clearance", "bucket_fill", "wheel_slip"]),
    ];
    for (plot, columns) in checklist {
        for c in columns {
            assert!(header.iter().any(|h| h == c), "{plot}: column {c} missing");
        }
    }
    assert_eq!(&header[..LABEL_COLUMNS.len()], LABEL_COLUMNS);
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert!(rows.iter().all(|r| r.len() == header.len()));
    for r in &rows {
        for v in r.iter().skip(LABEL_COLUMNS.len()) {
            let x: f64 = v.parse().unwrap();
            assert!(x.is_finite());
        }
    }
}

#[test]
fn inadmissible_converter_table_exits_2() {
    let tmp = TempDir::new().unwrap();
    let mut v = reference_value();
    // mu = 2.0 at nu = 0.6: the turbine would put out more power than the pump takes in.
    v["converter"]["torque_ratio"][3] = json!(2.0);
    let cfg = write_config(tmp.path(), "bad.json", &v);
    let o = loadcycle(&["run", arg(&cfg), "-o", arg(&tmp.path().join("out"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("converter.torque_ratio"), "{}", stderr(&o));
}

#[test]
fn unknown_key_exits_2_with_path() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &json!({ "operator": { "slip_threshold_one": 0.2 } }));
    let o = loadcycle(&["validate", arg(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("operator.slip_threshold_one"), "{}", stderr(&o));

    fs::write(tmp.path().join("broken.json"), "{ \"sim\": ").unwrap();
    let o = loadcycle(&["validate", arg(&tmp.path().join("broken.json"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_4() {
    let tmp = TempDir::new().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "not a directory").unwrap();
    let o = loadcycle(&["run", arg(&configs().join("reference.json")), "-o", arg(&blocker.join("out"))]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));

    let o = loadcycle(&["validate", arg(&tmp.path().join("missing.json"))]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn validate_reports_defaults() {
    let tmp = TempDir::new().unwrap();
    let mut v = reference_value();
    v["operator"].as_object_mut().unwrap().remove("slip_threshold_1");
    let cfg = write_config(tmp.path(), "c.json", &v);
    let o = loadcycle(&["validate", arg(&cfg)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("operator.slip_threshold_1 not set"), "{}", stderr(&o));
    let printed: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(printed, reference_value());

    let o = loadcycle(&["validate", arg(&configs().join("reference.json"))]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).is_empty(), "{}", stderr(&o));
}

#[test]
fn negative_pile_slope_exits_2() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &json!({ "pile": { "slope_angle": -0.3 } }));
    let o = loadcycle(&["validate", arg(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("pile.slope_angle"));
}

#[test]
fn simulation_fault_exits_3_with_flagged_partial_output() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "short.json", &json!({ "sim": { "max_sim_time": 2.0 } }));
    let out = tmp.path().join("out");
    let o = loadcycle(&["run", arg(&cfg), "-o", arg(&out)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("ApproachPile"), "{}", stderr(&o));
    let report: FaultReport = serde_json::from_str(&fs::read_to_string(out.join("fault.json")).unwrap()).unwrap();
    assert_eq!(report.phase, "ApproachPile");
    assert_eq!(report.step, 2000);
    let rows = fs::read_to_string(out.join("telemetry.csv")).unwrap().lines().count() - 1;
    assert_eq!(rows, report.rows);
    assert!(!out.join("metrics.json").exists());
}

#[test]
fn compare_identical_configs_gives_zero_deltas() {
    let tmp = TempDir::new().unwrap();
    let reference = configs().join("reference.json");
    let o = loadcycle(&["compare", arg(&reference), arg(&reference), "-o", arg(tmp.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: ComparisonReport =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("comparison.json")).unwrap()).unwrap();
    for d in [report.cycle_time, report.fuel_total, report.mean_engine_speed, report.max_engine_speed, report.bucket_fill_final] {
        assert_eq!(d.delta, 0.0);
        assert_eq!(d.ratio, 1.0);
    }
    assert_eq!(report.mean_normalized_speed_shift, 0.0);
    let a = fs::read(tmp.path().join("a/telemetry.csv")).unwrap();
    let b = fs::read(tmp.path().join("b/telemetry.csv")).unwrap();
    assert_eq!(a, b);

    let mut rdr = csv::Reader::from_path(tmp.path().join("duty.csv")).unwrap();
    assert_eq!(&rdr.headers().unwrap()[0], "run");
    let tags: Vec<String> = rdr.records().map(|r| r.unwrap()[0].to_string()).collect();
    let n_a = tags.iter().filter(|t| *t == "a").count();
    assert_eq!(n_a, tags.len() - n_a);
}

#[test]
fn compare_with_faulting_leg_flags_partial_outputs() {
    let tmp = TempDir::new().unwrap();
    let short = write_config(tmp.path(), "short.json", &json!({ "sim": { "max_sim_time": 1.0 } }));
    let out = tmp.path().join("cmp");
    let o = loadcycle(&["compare", arg(&configs().join("reference.json")), arg(&short), "-o", arg(&out)]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(out.join("fault.json").is_file());
    assert!(out.join("b/fault.json").is_file());
    assert!(!out.join("a/fault.json").exists());
    assert!(out.join("a/metrics.json").is_file());
    assert!(!out.join("comparison.json").exists());
    let marker: Value = serde_json::from_str(&fs::read_to_string(out.join("fault.json")).unwrap()).unwrap();
    assert_eq!(marker["complete"], json!(false));
}

#[test]
fn rerun_clears_stale_fault_marker() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let short = write_config(tmp.path(), "short.json", &json!({ "sim": { "max_sim_time": 1.0 } }));
    assert_eq!(loadcycle(&["run", arg(&short), "-o", arg(&out)]).status.code(), Some(3));
    assert!(out.join("fault.json").exists());
    assert_eq!(loadcycle(&["run", arg(&configs().join("reference.json")), "-o", arg(&out)]).status.code(), Some(0));
    assert!(!out.join("fault.json").exists());
}

#[test]
fn log_level_comes_from_environment() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.json", &json!({ "sim": { "max_sim_time": 0.5 } }));
    let quiet = loadcycle(&["run", arg(&cfg), "-o", arg(&tmp.path().join("q"))]);
    let verbose = Command::new(env!("CARGO_BIN_EXE_loadcycle"))
        .env("LOADCYCLE_LOG", "info")
        .args(["run", arg(&cfg), "-o", arg(&tmp.path().join("v"))])
        .output()
        .unwrap();
    assert!(!stderr(&quiet).contains("simulating"));
    assert!(stderr(&verbose).contains("simulating"), "{}", stderr(&verbose));
}
