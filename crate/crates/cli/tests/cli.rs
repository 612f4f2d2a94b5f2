use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_trajbell"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// `find-state` output for the product state `|0⟩|0⟩` on `n_sub` levels.
fn write_vacuum_state(dir: &Path, n_sub: usize) -> PathBuf {
    let mut c = vec![[0.0, 0.0]; n_sub * n_sub];
    c[0] = [1.0, 0.0];
    let doc = serde_json::json!({
        "schema_version": 1,
        "command": "find-state",
        "units": {"system": "natural", "length": "(hbar/(M*Omega))^(1/2)", "time": "1/Omega",
                  "length_scale_m": null, "time_scale_s": null},
        "T": 1.5707963267948966,
        "xi_minus": 0.5,
        "violation": false,
        "spectral_gap": 0.1,
        "degenerate": false,
        "strategy": {"alice": [4.0, 1.0], "bob": [4.0, 1.0]},
        "n_sub": n_sub,
        "c_mn": c,
        "convergence": {}
    });
    let path = dir.join("vacuum.json");
    std::fs::write(&path, serde_json::to_string(&doc).unwrap()).unwrap();
    path
}

#[test]
fn small_find_state_writes_documented_fields() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("state.json");
    let o = run(&["find-state", "--n-sub", "5", "--n-big", "16", "--out", path_str(&out)]);
    let v = json(&out);
    for key in ["schema_version", "T", "xi_minus", "c_mn", "convergence"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["c_mn"].as_array().unwrap().len(), 25);
    assert_eq!(v["convergence"].as_object().unwrap().len(), 2);
    let xi = v["xi_minus"].as_f64().unwrap();
    assert_eq!(code(&o), if xi < 0.0 { 0 } else { 3 });
}

#[test]
fn zero_time_and_single_level_report_no_violation() {
    let o = run(&["find-state", "--target-time", "0", "--n-sub", "4", "--n-big", "8"]);
    assert_eq!(code(&o), 3);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["xi_minus"].as_f64().unwrap() >= 0.0);
    let o = run(&["find-state", "--n-sub", "1", "--n-big", "8"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"n_sub": 0}"#).unwrap();
    assert_eq!(code(&run(&["--config", path_str(&cfg), "find-state"])), 2);
    std::fs::write(&cfg, r#"{"no_such_field": 1}"#).unwrap();
    assert_eq!(code(&run(&["--config", path_str(&cfg), "find-state"])), 2);
    assert_eq!(code(&run(&["find-state", "--alice-omega", "-1,1"])), 2);
    assert_eq!(code(&run(&["sweep", "--state", "/nonexistent/state.json"])), 2);
    assert_eq!(code(&run(&["find-state", "--bogus-flag"])), 2);
    let state = write_vacuum_state(dir.path(), 3);
    // state has n_sub = 3, configuration default is 9
    assert_eq!(code(&run(&["sweep", "--state", path_str(&state)])), 2);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"n_sub": 3, "n_big": 8, "target_time": 0.0, "convergence_check": false}"#).unwrap();
    let o = run(&["--config", path_str(&cfg), "find-state"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["n_sub"], 3);
    assert_eq!(v["T"].as_f64().unwrap(), 0.0);
    let o = run(&["--config", path_str(&cfg), "find-state", "--n-sub", "4", "--target-time", "1.5"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["n_sub"], 4);
    assert_eq!(v["T"].as_f64().unwrap(), 1.5);
    assert!(v["convergence"].as_object().unwrap().is_empty());
}

#[test]
fn separable_sweep_rows_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let state = write_vacuum_state(dir.path(), 3);
    let out = dir.path().join("curve.csv");
    let o = run(&["sweep", "--state", path_str(&state), "--n-sub", "3", "--steps", "121", "--out", path_str(&out)]);
    // no negative interval for a product state
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,f00,f01,f10,f11,S"));
    let mut rows = 0;
    for line in lines {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(f.len(), 6);
        assert!((f[5] - (f[1] + f[2] + f[3] - f[4])).abs() < 1e-12);
        assert!(f[5] >= -1e-9);
        rows += 1;
    }
    assert_eq!(rows, 121);
    let side = json(&dir.path().join("curve.csv.json"));
    assert_eq!(side["schema_version"], 1);
    assert!(side["negative_intervals"].as_array().unwrap().is_empty());
}

#[test]
fn si_units_rescale_lengths_and_times() {
    let natural = run(&["find-state", "--n-sub", "3", "--n-big", "8", "--no-convergence-check"]);
    let si = run(&["--units", "si", "find-state", "--n-sub", "3", "--n-big", "8", "--no-convergence-check"]);
    let (a, b): (Value, Value) = (
        serde_json::from_slice(&natural.stdout).unwrap(),
        serde_json::from_slice(&si.stdout).unwrap(),
    );
    let length = (1.054_571_817e-34f64 / (1e-30 * 1e8)).sqrt();
    let xa = a["xi_minus"].as_f64().unwrap();
    let xb = b["xi_minus"].as_f64().unwrap();
    assert!((xb - xa * length).abs() <= 1e-12 * xb.abs());
    assert!((b["T"].as_f64().unwrap() - std::f64::consts::FRAC_PI_2 * 1e-8).abs() < 1e-20);
    assert_eq!(b["units"]["length"], "m");
    assert_eq!(a["c_mn"], b["c_mn"]);
}

#[test]
fn hv_demo_outcomes() {
    let o = run(&["hv-demo", "--lattice", "identity", "--sites", "5", "--steps", "2", "--samples", "20000"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["total_variation"].as_f64().unwrap(), 0.0);
    let o = run(&["hv-demo", "--samples", "100000", "--corrupt"]);
    assert_eq!(code(&o), 4);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["pass"], false);
    let o = run(&["hv-demo", "--samples", "100", "--seed", "3"]);
    assert_eq!(code(&o), 4);
    let o = run(&["hv-demo", "--lattice", "harmonic", "--sites", "1"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn classical_check_modes() {
    let o = run(&["classical-check", "--ensembles", "200", "--functional", "abs"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["min_s"].as_f64().unwrap() >= -1e-10);
    assert!(v["min_generalized"].is_null());
    let o = run(&["classical-check", "--degenerate"]);
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    for key in ["min_s", "min_s_of_t", "min_generalized"] {
        assert!(v[key].as_f64().unwrap().abs() < 1e-12, "{key}");
    }
    let o = run(&["classical-check", "--ensembles", "200", "--functional", "positive-sup"]);
    assert_eq!(code(&o), 0);
    assert!(serde_json::from_slice::<Value>(&o.stdout).unwrap()["min_generalized"].as_f64().unwrap() >= -1e-10);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["hv-demo", "--lattice", "harmonic", "--sites", "6", "--steps", "3", "--samples", "150000", "--seed", "9"];
    let a = run(&args);
    let b = bin().args(args).env("RAYON_NUM_THREADS", "1").output().unwrap();
    assert_eq!(a.stdout, b.stdout);
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"classical": {"ensembles": 50}, "seed": 4}"#).unwrap();
    let a = run(&["--config", path_str(&cfg), "classical-check"]);
    let b = run(&["--config", path_str(&cfg), "classical-check"]);
    assert_eq!(a.stdout, b.stdout);
}
