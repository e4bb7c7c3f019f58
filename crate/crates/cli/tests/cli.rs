use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const RAMP: &str = r#"{"experiment": "ramp-trajectory", "delta_mhz": 30, "omega_i_mhz": 0, "omega_f_mhz": 120, "t_ramp": 20, "samples": 5}"#;
const FF: &str = r#"{"experiment": "ff-resonator", "delta_mhz": 30, "omega_i_mhz": 0, "omega_f_mhz": 120, "t_ramp": [10, 20, 40], "schedules": ["ff", "reference"]}"#;

fn ffscale(args: &[&str], config: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ffscale"));
    cmd.args(args);
    if let Some(c) = config {
        cmd.arg("--config").arg(c);
    }
    cmd.output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, text).unwrap();
    path
}

fn error_of(out: &Output) -> Value {
    let v: Value = serde_json::from_slice(&out.stderr).unwrap();
    v["error"].clone()
}

#[test]
fn ramp_prints_csv_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), RAMP);
    let out = ffscale(&["ramp"], Some(&cfg));
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t_ns,alpha0,alpha0_dot_over_delta,alpha0_ddot_over_delta2,alpha_ff,omega0_mhz,omega_ff_mhz"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 5);
    assert!(rows[4].starts_with("2.0000000000000000e1,4.0000000000000000e0,"));
}

#[test]
fn out_writes_csv_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), FF);
    let csv = dir.path().join("ff.csv");
    let out = ffscale(&["ff-resonator", "--out", csv.to_str().unwrap()], Some(&cfg));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = fs::read_to_string(&csv).unwrap();
    assert_eq!(table.lines().count(), 7);
    let meta: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("ff.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["experiment"], "ff-resonator");
    assert_eq!(meta["rows"], 6);
    assert_eq!(meta["truncations"].as_array().unwrap().len(), 6);
    for line in table.lines().skip(1).filter(|l| l.contains(",ff,")) {
        let inf: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(inf < 1e-6, "{line}");
    }
}

#[test]
fn row_order_does_not_depend_on_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), FF);
    let one = ffscale(&["ff-resonator", "--jobs", "1"], Some(&cfg));
    let three = ffscale(&["ff-resonator", "--jobs", "3"], Some(&cfg));
    assert!(one.status.success() && three.status.success());
    assert_eq!(one.stdout, three.stdout);
}

#[test]
fn dim_override_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"experiment": "ff-resonator", "delta_mhz": 30, "omega_i_mhz": 0, "omega_f_mhz": 120, "t_ramp": 20, "schedules": ["ff"]}"#,
    );
    let csv = dir.path().join("o.csv");
    let out = ffscale(
        &["ff-resonator", "--dim-override", "resonator=70", "--out", csv.to_str().unwrap()],
        Some(&cfg),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let meta: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("o.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["truncations"][0][0], 70);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (r#"{"experiment": "ramp-trajectory", "omega_i_mhz": 0, "omega_f_mhz": 120, "t_ramp": 20}"#, "delta_mhz required"),
        (r#"{"experiment": "ramp-trajectory", "delta_mhz": 30, "omega_i_mhz": 0, "omega_f_mhz": 120, "t_ramp": 20, "bogus": 1}"#, "unknown field"),
        (FF, "subcommand"),
        ("not json", "invalid JSON"),
    ];
    for (text, needle) in cases {
        let cfg = write_config(dir.path(), text);
        let out = ffscale(&["ramp"], Some(&cfg));
        assert_eq!(out.status.code(), Some(2), "{text}");
        let e = error_of(&out);
        assert_eq!(e["kind"], "config");
        assert!(e["message"].as_str().unwrap().contains(needle), "{e}");
    }
    let out = ffscale(&["ramp"], Some(&dir.path().join("missing.json")));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_flags_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), FF);
    for args in [
        &["ff-resonator", "--tol", "fast"][..],
        &["ff-resonator", "--dim-override", "resonator=1"],
        &["ff-resonator", "--dim-override", "kpo3=40"],
    ] {
        let out = ffscale(args, Some(&cfg));
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert_eq!(error_of(&out)["kind"], "config");
    }
}

#[test]
fn infeasible_schedule_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"experiment": "ff-ts-resonator", "delta_i_mhz": 20, "delta_f_mhz": 200, "omega_i_mhz": 80, "t_ramp": [1]}"#,
    );
    let out = ffscale(&["ff-ts"], Some(&cfg));
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_of(&out)["kind"], "infeasible");
}

#[test]
fn numerical_failures_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"experiment": "ff-resonator", "delta_mhz": 30, "omega_i_mhz": 0, "omega_f_mhz": 120, "t_ramp": 20, "schedules": ["reference"]}"#,
    );
    for args in [&["ff-resonator", "--tol", "1e-1,1e-1"][..], &["ff-resonator", "--dim-override", "resonator=3"]] {
        let out = ffscale(args, Some(&cfg));
        assert_eq!(out.status.code(), Some(4), "{args:?}");
        assert_eq!(error_of(&out)["kind"], "numerical");
    }
}

#[test]
fn creates_missing_output_directories() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), RAMP);
    let target = dir.path().join("a").join("b").join("ramp.csv");
    let out = ffscale(&["ramp", "--out", target.to_str().unwrap()], Some(&cfg));
    assert!(out.status.success());
    assert!(target.exists());
}

#[test]
fn unwritable_output_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), RAMP);
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let target = blocker.join("ramp.csv");
    let out = ffscale(&["ramp", "--out", target.to_str().unwrap()], Some(&cfg));
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_of(&out)["kind"], "io");
}
