use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn margins(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_margins"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn write_instance(dir: &Path, name: &str, columns: &str) {
    let text = format!(r#"{{"name":"{name}","columns":{columns},"normalize":false}}"#);
    fs::write(dir.join(format!("{name}.json")), text).unwrap();
}

fn setup() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    write_instance(dir.path(), "quadrant", "[[1,0],[0,1]]");
    write_instance(dir.path(), "segment", "[[1,0],[-1,0]]");
    dir
}

#[test]
fn generation_is_byte_reproducible() {
    let dir = setup();
    let args = ["gen", "--kind", "planted-positive", "-d", "3", "-n", "6", "--target", "0.3", "--seed", "11"];
    let first = margins(dir.path(), &[&args[..], &["-o", "a.json"]].concat());
    let second = margins(dir.path(), &[&args[..], &["-o", "b.json"]].concat());
    assert!(first.status.success() && second.status.success());
    let a = fs::read(dir.path().join("a.json")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b.json")).unwrap());
    let meta: Value = serde_json::from_slice(&a).unwrap();
    assert!(meta["metadata"]["rho_affine"].as_f64().unwrap() >= 0.3);
}

#[test]
fn generated_triangle_has_half_negative_margin() {
    let dir = setup();
    let out = margins(
        dir.path(),
        &["gen", "--kind", "planted-negative", "-d", "2", "-n", "3", "--target", "-0.5", "--jitter", "0"],
    );
    assert!(out.status.success());
    let path = String::from_utf8(out.stdout).unwrap();
    let out = margins(dir.path(), &["margin", path.trim()]);
    let report = stdout_json(&out);
    assert!((report["rho_affine"].as_f64().unwrap() + 0.5).abs() < 1e-12);

    let out = margins(dir.path(), &["certify", path.trim(), "gordan3", "--gamma", "0.4"]);
    assert_eq!(out.status.code(), Some(0));
    let cert = stdout_json(&out);
    assert_eq!(cert["detail"]["verdict"]["alternative_held"], "second");
}

#[test]
fn margin_reports_exact_and_grid_values() {
    let dir = setup();
    let out = margins(dir.path(), &["margin", "quadrant.json", "--grid", "720"]);
    assert!(out.status.success());
    let r = stdout_json(&out);
    let exact = r["rho_affine"].as_f64().unwrap();
    assert!((exact - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    let grid = r["grid_estimate"].as_f64().unwrap();
    assert!(grid <= exact + 1e-12 && exact - grid <= 2.0 * std::f64::consts::PI / 720.0);
}

#[test]
fn np_margin_run_writes_trace_and_passes_checks() {
    let dir = setup();
    let out = margins(
        dir.path(),
        &["run", "quadrant.json", "-a", "np", "-m", "margin", "--out-dir", "out", "--dump-alpha"],
    );
    assert_eq!(out.status.code(), Some(0));
    let summary = stdout_json(&out);
    assert_eq!(summary["iterations"], 10_000);
    assert_eq!(summary["checks_failed"], 0);
    let names: Vec<&str> = summary["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(names.contains(&"||w_t/||w_t|| - w*|| <= 4/(rho+ sqrt(t))"));

    let csv = fs::read_to_string(dir.path().join("out/quadrant-np.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,norm_w,margin_t,loss,chosen_index"));
    assert_eq!(lines.count(), 10_001);
    assert!(dir.path().join("out/quadrant-np.summary.json").exists());
    assert!(dir.path().join("out/quadrant-np.alpha.json").exists());
}

#[test]
fn vng_dual_certificate_on_segment_takes_one_step() {
    let dir = setup();
    let out = margins(dir.path(), &["run", "segment.json", "-a", "vng", "-m", "dual", "--eps", "1e-6"]);
    assert_eq!(out.status.code(), Some(0));
    let s = stdout_json(&out);
    assert_eq!(s["iterations"], 1);
    assert_eq!(s["certificate"], "dual-epsilon");
}

#[test]
fn perceptron_on_segment_notes_infeasibility() {
    let dir = setup();
    let out = margins(dir.path(), &["run", "segment.json", "-a", "perceptron", "--max-iters", "100"]);
    assert_eq!(out.status.code(), Some(0));
    let s = stdout_json(&out);
    assert_eq!(s["termination"], "max-iterations");
    assert!(s["certificate"].is_null());
    let note = s["checks"][0]["note"].as_str().unwrap();
    assert!(note.contains("infeasible"));
}

#[test]
fn certify_exit_codes() {
    let dir = setup();
    let out = margins(dir.path(), &["certify", "quadrant.json", "hoffman-dual"]);
    assert_eq!(out.status.code(), Some(3));

    let out = margins(dir.path(), &["certify", "quadrant.json", "meb"]);
    assert_eq!(out.status.code(), Some(0));
    let r = stdout_json(&out);
    let radius = r["detail"]["ball"]["radius"].as_f64().unwrap();
    assert!((radius - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);

    let out = margins(dir.path(), &["certify", "segment.json", "hoffman-dual", "--x", "1,0"]);
    assert_eq!(out.status.code(), Some(0));
    let r = stdout_json(&out);
    assert!((r["detail"]["bound_value"].as_f64().unwrap() - 1.0).abs() < 1e-9);

    let out = margins(dir.path(), &["certify", "quadrant.json", "hoffman-primal"]);
    assert_eq!(out.status.code(), Some(0));

    let out = margins(dir.path(), &["certify", "segment.json", "radius"]);
    assert_eq!(out.status.code(), Some(0));

    let out = margins(dir.path(), &["certify", "quadrant.json", "gordan1", "--gamma", "0.5"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_one() {
    let dir = setup();
    assert_eq!(margins(dir.path(), &["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        margins(dir.path(), &["run", "quadrant.json", "-a", "simplex"]).status.code(),
        Some(1)
    );
    assert_eq!(margins(dir.path(), &["margin", "missing.json"]).status.code(), Some(1));
    assert_eq!(margins(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn batch_outputs_are_deterministic_and_reported() {
    let dir = setup();
    let plan = r#"{
        "instances": [
            {"kind": "planted-positive", "d": 3, "n": 5, "target_margin": 0.3, "seed": 1},
            {"kind": "planted-negative", "d": 3, "n": 6, "target_margin": -0.3, "seed": 2}
        ],
        "files": ["segment.json"],
        "algorithms": ["normalized-perceptron", "vng"],
        "mode": "margin-maximization"
    }"#;
    fs::write(dir.path().join("plan.json"), plan).unwrap();
    let run = |out_dir: &str| {
        let out = margins(dir.path(), &["batch", "plan.json", "--out-dir", out_dir, "--max-iters", "500"]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let mut names: Vec<String> = fs::read_dir(dir.path().join(out_dir))
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .collect();
        names.sort();
        names
    };
    let first = run("b1");
    assert_eq!(first, run("b2"));
    assert_eq!(first.iter().filter(|n| n.ends_with(".summary.json")).count(), 6);
    for name in &first {
        assert_eq!(
            fs::read(dir.path().join("b1").join(name)).unwrap(),
            fs::read(dir.path().join("b2").join(name)).unwrap()
        );
    }

    let out = margins(dir.path(), &["report", "b1"]);
    assert_eq!(out.status.code(), Some(0));
    let r = stdout_json(&out);
    assert_eq!(r["runs"], 6);
    assert_eq!(r["failed_runs"].as_array().unwrap().len(), 0);
}

#[test]
fn report_exits_two_on_a_violation() {
    let dir = setup();
    let out = margins(dir.path(), &["run", "quadrant.json", "-a", "np", "-m", "margin", "--max-iters", "50", "--out-dir", "r"]);
    assert!(out.status.success());
    let path = dir.path().join("r/quadrant-np.summary.json");
    let mut s: Value = serde_json::from_slice(&fs::read(&path).unwrap()).unwrap();
    s["checks"][0]["violations"] = 1.into();
    s["checks_failed"] = 1.into();
    fs::write(&path, serde_json::to_vec(&s).unwrap()).unwrap();
    let out = margins(dir.path(), &["report", "r"]);
    assert_eq!(out.status.code(), Some(2));
}
