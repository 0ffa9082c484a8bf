//! End-to-end tests of the command-line interface: exit codes, report
//! shapes, file outputs, and byte reproducibility.

use std::path::Path;
use std::process::{Command, Output};

fn floq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_floq"))
        .args(args)
        .output()
        .expect("failed to spawn floq")
}

fn stdout_json(output: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&output.stdout);
    serde_json::from_str(&text).unwrap_or_else(|e| panic!("bad JSON ({e}): {text}"))
}

#[test]
fn verify_builtin_passes() {
    let out = floq(&["verify", "harmonic:zD", "--rate=-1"]);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    assert_eq!(report["pass"], true);
    assert!(report["reason"].is_null());
    assert_eq!(report["periodicity"]["pass"], true);
    assert_eq!(report["regularity"]["pass"], true);
    assert_eq!(report["lie"]["pass"], true);
}

#[test]
fn verify_codimension_error_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        r#"{
  "dim": 3,
  "conserved": ["x^2+y^2-1", "z"],
  "dissipated": ["z"],
  "rates": ["-1"],
  "orbit": {"type": "circle"}
}"#,
    )
    .unwrap();
    let out = floq(&["verify", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("codimension"), "{stderr}");
}

fn write_circle_csv(path: &Path, period: f64, radius: f64) {
    let n = 128;
    let mut csv = String::from("t,x1,x2,x3\n");
    for i in 0..=n {
        let t = period * i as f64 / n as f64;
        csv.push_str(&format!(
            "{},{},{},0.0\n",
            t,
            radius * t.sin(),
            radius * t.cos()
        ));
    }
    std::fs::write(path, csv).unwrap();
}

#[test]
fn verify_wrong_period_orbit_fails_with_closure_reason() {
    let dir = tempfile::tempdir().unwrap();
    write_circle_csv(&dir.path().join("orbit.csv"), 5.0, 1.0);
    let path = dir.path().join("sys.json");
    std::fs::write(
        &path,
        r#"{
  "dim": 3,
  "conserved": ["x^2+y^2-1"],
  "dissipated": ["z"],
  "rates": ["-1"],
  "base_field": ["y", "-x", "0"],
  "orbit": {"type": "csv", "path": "orbit.csv", "period": 5.0}
}"#,
    )
    .unwrap();
    let out = floq(&["verify", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let report = stdout_json(&out);
    assert_eq!(report["pass"], false);
    assert_eq!(report["reason"], "closure");
}

#[test]
fn multipliers_constant_damping() {
    let dir = tempfile::tempdir().unwrap();
    let json_path = dir.path().join("report.json");
    let csv_path = dir.path().join("summary.csv");
    let out = floq(&[
        "multipliers",
        "harmonic:zD",
        "--rate=-1",
        "--out",
        json_path.to_str().unwrap(),
        "--csv",
        csv_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    let analytic: Vec<f64> = report["analytic"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["re"].as_f64().unwrap())
        .collect();
    assert_eq!(analytic.len(), 3);
    assert!((analytic[0] - 1.0).abs() < 1e-15);
    assert!((analytic[1] - 1.0).abs() < 1e-15);
    assert!((analytic[2] - 0.0018674427317079893).abs() < 1e-12);
    assert!(report["max_pairing_gap"].as_f64().unwrap() <= 1e-5);
    assert_eq!(report["verdict"], "StableOnManifold");
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with("index,analytic_re,analytic_im,numeric_re,numeric_im,gap\n"));
    assert_eq!(csv.lines().count(), 4); // header + one row per multiplier
}

#[test]
fn multipliers_zero_mean_rate_inconclusive() {
    let out = floq(&["multipliers", "harmonic:zD", "--rate=x", "--no-numeric"]);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    for c in report["analytic"].as_array().unwrap() {
        assert!((c["re"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    }
    assert_eq!(report["verdict"], "Inconclusive");
    assert!(report["numeric"].is_null());
}

#[test]
fn multipliers_reports_are_byte_reproducible() {
    let args = ["multipliers", "euler:energyI", "--rate=-1"];
    let a = floq(&args);
    let b = floq(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn stabilize_both_branches_and_augmented_file_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let aug = dir.path().join("augmented.json");
    let out = floq(&[
        "stabilize",
        "euler:energyI",
        "--rate-kind",
        "stabilizing",
        "--psi",
        "0",
        "--c",
        "1",
        "--out",
        aug.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = stdout_json(&out);
    assert_eq!(report["verdict"], "StableOnManifold");
    assert!(report["manifold"].as_str().unwrap().contains("ellipsoid"));
    // The augmented file is itself a valid system that verifies.
    let out = floq(&["verify", aug.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));

    let out = floq(&[
        "stabilize",
        "euler:energyI",
        "--rate-kind",
        "destabilizing",
        "--psi",
        "0",
        "--c",
        "1",
        "--out",
        aug.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    assert_eq!(report["verdict"], "Unstable");

    let out = floq(&[
        "stabilize",
        "harmonic:planar",
        "--rate-kind",
        "stabilizing",
        "--psi",
        "x",
        "--c",
        "0.5",
        "--out",
        aug.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    assert_eq!(report["verdict"], "StableOnManifold");
    assert!(report["manifold"].as_str().unwrap().contains("plane z=0"));
}

#[test]
fn stabilize_rejects_bad_template_and_missing_base_field() {
    let dir = tempfile::tempdir().unwrap();
    let aug = dir.path().join("aug.json");
    let out = floq(&[
        "stabilize",
        "euler:energyI",
        "--rate-kind",
        "stabilizing",
        "--c",
        "0",
        "--out",
        aug.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("c > 0"));

    // Synthesis-mode file (no base field) cannot be stabilized.
    let path = dir.path().join("synth.json");
    std::fs::write(
        &path,
        r#"{
  "dim": 3,
  "conserved": ["x^2+y^2-1"],
  "dissipated": ["z"],
  "rates": ["-1"],
  "nu": "-0.5",
  "orbit": {"type": "circle"}
}"#,
    )
    .unwrap();
    let out = floq(&[
        "stabilize",
        path.to_str().unwrap(),
        "--rate-kind",
        "stabilizing",
        "--out",
        aug.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("base field"));
}

#[test]
fn simulate_writes_trajectory_with_distance_column() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("traj.csv");
    let out = floq(&[
        "simulate",
        "harmonic:zD",
        "--rate=-1",
        "--x0",
        "0,1,0.1",
        "--t-end",
        "30",
        "--observe",
        "dist",
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,x1,x2,x3,dist_to_orbit");
    let last = lines.last().unwrap();
    let fields: Vec<f64> = last.split(',').map(|s| s.parse().unwrap()).collect();
    assert!((fields[0] - 30.0).abs() < 1e-12);
    let dist = fields[4];
    assert!(dist <= 1e-6, "final distance {dist}");
}

#[test]
fn simulate_unperturbed_system_keeps_its_offset() {
    // Zero rate: z stays constant, so the distance to the orbit holds at
    // the initial offset (the start point lies on the invariant cylinder).
    let out = floq(&[
        "simulate",
        "harmonic:zD",
        "--rate=0",
        "--x0",
        "0,1,0.1",
        "--t-end",
        "20",
        "--observe",
        "dist",
        "--points",
        "21",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let csv = String::from_utf8_lossy(&out.stdout);
    for line in csv.lines().skip(1) {
        let dist: f64 = line.split(',').next_back().unwrap().parse().unwrap();
        assert!((dist - 0.1).abs() <= 1e-6, "distance drifted: {line}");
    }
}

#[test]
fn simulate_rejects_wrong_arity_x0() {
    let out = floq(&["simulate", "harmonic:zD", "--x0", "0,1", "--t-end", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_builtin_is_an_input_error() {
    let out = floq(&["verify", "harmonic:zz"]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("builtin"), "{stderr}");
}
