//! End-to-end checks of the command-line binary: exit codes, output
//! formats, and byte-level determinism.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pwcyl"))
}

fn write_cfg(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("pwcyl-cli-tests");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

const EXAMPLE_1: &str = "\
# unique-cylinder fixture
mode = canonical
a_plus = 1/20
b_plus = 0
c_plus = -7/16
d_plus = 5/8
a_minus = 1
b_minus = 1
c_minus = 1/2
d_minus = 3/16
m = 1
";

const EXAMPLE_2: &str = "\
mode = canonical
a_plus = -1
b_plus = 1
c_plus = 0
d_plus = -1
a_minus = -2
b_minus = -1
c_minus = 0
d_minus = -2
m = 0
";

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn classify_unique_cylinder_fixture() {
    let cfg = write_cfg("ex1.cfg", EXAMPLE_1);
    let out = run(&["classify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(json["structure"], "unique-cylinder");
    assert_eq!(json["upper"]["kind"], "Sa");
    assert_eq!(json["invariants"]["beta"].as_f64().unwrap(), 1.0 / 3.0);
    // 17-significant-digit float fields
    assert!(text.contains("5.0000000000000003e-2"), "{text}");
}

#[test]
fn classify_continuum_fixture() {
    let cfg = write_cfg("ex2.cfg", EXAMPLE_2);
    let out = run(&["classify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["structure"], "infinitely-many-cylinders");
    assert_eq!(json["invariants"]["kappa"].as_f64().unwrap(), 0.0);
}

#[test]
fn cycles_reports_cylinder_and_cycle() {
    let cfg = write_cfg("ex1b.cfg", EXAMPLE_1);
    let out = run(&["cycles", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["cylinders"].as_array().unwrap().len(), 1);
    assert_eq!(json["cycles"].as_array().unwrap().len(), 1);
    let closure = json["cycles"][0]["closure_residual"].as_f64().unwrap();
    assert!(closure < 1e-6);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let cfg = write_cfg("ex2b.cfg", EXAMPLE_2);
    let args = [
        "cycles",
        "--config",
        cfg.to_str().unwrap(),
        "--y-min",
        "0.25",
        "--y-max",
        "3",
    ];
    let first = run(&args);
    let second = run(&args);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout, "byte-identical JSON");
    assert!(!first.stdout.is_empty());
}

#[test]
fn unknown_key_is_invalid_scenario() {
    let cfg = write_cfg("bad-key.cfg", &format!("{EXAMPLE_1}oops = 1\n"));
    let out = run(&["classify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("oops"));
}

#[test]
fn missing_arguments_fail_with_usage_code() {
    let out = run(&["classify"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fold_precondition_failure_maps_to_exit_3() {
    // b2+ = 0: the tangency line is invariant, not a fold
    let mut body = String::from("mode = quasinormal\n");
    for side in ["plus", "minus"] {
        for key in ["a11", "a12", "a13", "a21", "a22", "a23", "a33", "b1"] {
            body.push_str(&format!("{key}_{side} = 0\n"));
        }
    }
    body.push_str("b2_plus = 0\nb2_minus = 1\n");
    let cfg = write_cfg("invariant-line.cfg", &body);
    let out = run(&["classify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("invariant"));
}

#[test]
fn orbit_emits_csv_with_markers() {
    let cfg = write_cfg("ex2c.cfg", EXAMPLE_2);
    let out = run(&[
        "orbit",
        "--config",
        cfg.to_str().unwrap(),
        "--y0",
        "1",
        "--t-end",
        "4",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "t,x,y,z,piece,crossing");
    assert!(text.lines().any(|l| l.ends_with(",1")), "crossing rows");
    assert!(text.trim_end().ends_with("# termination: time-end"));
    // pieces alternate at crossings: first crossing hands over to '-'
    let first_crossing = text.lines().find(|l| l.ends_with(",1")).unwrap();
    assert!(first_crossing.contains(",-,"), "{first_crossing}");
}

#[test]
fn orbit_from_scroll_scenario_reports_no_return() {
    // a saddle-dominated draw whose orbit escapes: no crossing before t_end
    let body = "\
mode = canonical
a_plus = 0
b_plus = 0
c_plus = 0.5
d_plus = 1.5
a_minus = 0
b_minus = 0
c_minus = -0.3
d_minus = 0.2
m = 0
";
    let cfg = write_cfg("scroll.cfg", body);
    let out = run(&[
        "orbit",
        "--config",
        cfg.to_str().unwrap(),
        "--y0",
        "8",
        "--t-end",
        "30",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(
        text.trim_end().ends_with("# termination: time-end (no return)"),
        "{}",
        text.lines().last().unwrap()
    );
}

#[test]
fn sweep_rows_are_deterministic_and_ordered() {
    let cfg = write_cfg("ex1c.cfg", EXAMPLE_1);
    let args = [
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--param",
        "c_minus",
        "--start",
        "0.3",
        "--stop",
        "0.7",
        "--steps",
        "3",
        "--format",
        "csv",
        "--seed",
        "9",
    ];
    let first = run(&args);
    assert_eq!(first.status.code(), Some(0));
    let text = stdout(&first);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4, "{text}");
    assert!(lines[0].starts_with("value,type_plus"));
    assert!(lines[1].starts_with("0.3,Sa,Sa,"));
    assert!(lines[2].starts_with("0.5,Sa,Sa,unique-cylinder"));
    assert_eq!(run(&args).stdout, first.stdout);
}

#[test]
fn audit_tables_summarizes_rows() {
    let out = run(&["audit-tables", "--draws", "1", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("(Ce, Ce): ok"));
    assert!(text.contains("skipped — table entry unparseable"));
    assert!(text.contains("total mismatches:"));
}

#[test]
fn json_config_equivalent_to_kv() {
    let kv = write_cfg("ex1-kv.cfg", EXAMPLE_1);
    let json_cfg = write_cfg(
        "ex1.json",
        r#"{
  "mode": "canonical",
  "a_plus": 0.05, "b_plus": 0, "c_plus": -0.4375, "d_plus": 0.625,
  "a_minus": 1, "b_minus": 1, "c_minus": 0.5, "d_minus": 0.1875,
  "m": 1
}"#,
    );
    let a = run(&["classify", "--config", kv.to_str().unwrap()]);
    let b = run(&["classify", "--config", json_cfg.to_str().unwrap()]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn focus_mode_runs_dedicated_path() {
    let body = "\
mode = focus
a_plus = 0.2
b_plus = -0.4
a_minus = -0.3
b_minus = 0.1
m = 0.7
d1 = 1.5
d2 = 2
t1 = -0.6
t2 = 0.8
a1 = -1.2
a2 = 0.9
";
    let cfg = write_cfg("focus.cfg", body);
    let out = run(&["cycles", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["classify"]["structure"], "focus-focus");
    assert!(json["focus"].is_object());
    assert!(json["cylinders"].as_array().unwrap().len() <= 1);

    // constraint violation is a theory rejection
    let bad = write_cfg("focus-bad.cfg", &body.replace("a2 = 0.9", "a2 = -0.9"));
    let out = run(&["cycles", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn raw_mode_reduces_and_classifies() {
    // the unique-cylinder fixture rotated and translated inside the plane
    let mut body = String::from("mode = raw\n");
    let entries_plus = [
        ("a11", "0.05"),
        ("a12", "0"),
        ("a13", "0"),
        ("a21", "0"),
        ("a22", "-0.4375"),
        ("a23", "0.625"),
        ("a31", "0"),
        ("a32", "1"),
        ("a33", "0"),
        ("b1", "0"),
        ("b2", "-1"),
        ("b3", "0"),
    ];
    let entries_minus = [
        ("a11", "1"),
        ("a12", "0"),
        ("a13", "1"),
        ("a21", "0"),
        ("a22", "0.5"),
        ("a23", "0.1875"),
        ("a31", "0"),
        ("a32", "2"), // scaled crossing row: same line, time rescale absorbs it
        ("a33", "0"),
        ("b1", "1"),
        ("b2", "2"),
        ("b3", "0"),
    ];
    for (k, v) in entries_plus {
        body.push_str(&format!("{k}_plus = {v}\n"));
    }
    for (k, v) in entries_minus {
        body.push_str(&format!("{k}_minus = {v}\n"));
    }
    let cfg = write_cfg("raw.cfg", &body);
    let out = run(&["classify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["upper"]["kind"], "Sa");
    assert!(json["tangency"].is_array());
}
