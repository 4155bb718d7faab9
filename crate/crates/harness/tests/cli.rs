use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn wave3d(args: &[&str], env_workers: Option<&str>) -> std::process::Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_wave3d"));
    cmd.args(args).env_remove("WAVE3D_WORKERS");
    if let Some(w) = env_workers {
        cmd.env("WAVE3D_WORKERS", w);
    }
    cmd.output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn record(stderr: &[u8]) -> Value {
    let text = String::from_utf8_lossy(stderr);
    serde_json::from_str(text.lines().last().expect("an error line")).expect("machine-readable record")
}

#[test]
fn invalid_config_exits_nonzero_with_keyed_record() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.json", r#"{"noise": {"beta": 2.5}}"#);
    let out = dir.path().join("out");
    let o = wave3d(&["oracle", "--config", &cfg, "--out", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    let rec = record(&o.stderr);
    assert_eq!(rec["status"], "error");
    assert_eq!(rec["kind"], "config");
    assert_eq!(rec["key"], "noise.beta");
    let saved: Value = serde_json::from_slice(&fs::read(out.join("error.json")).unwrap()).unwrap();
    assert_eq!(saved, rec);
}

#[test]
fn bad_worker_environment_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = wave3d(&["oracle", "--out", out.to_str().unwrap()], Some("many"));
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(record(&o.stderr)["key"], "workers");
}

#[test]
fn blowup_exits_with_the_step() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "blowup.json",
        r#"{"replicas": 2, "solver": {"preset": "linear_noise",
            "drift": {"kind": "affine", "slope": 1e300, "intercept": 1e300}}}"#,
    );
    let out = dir.path().join("out");
    let o = wave3d(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap(), "--workers", "1"], None);
    assert_eq!(o.status.code(), Some(3));
    let rec = record(&o.stderr);
    assert_eq!(rec["kind"], "numerical_blowup");
    assert!(rec["step"].as_u64().is_some_and(|s| s >= 1));
}

#[test]
fn print_config_round_trips_with_overrides() {
    let o = wave3d(&["simulate", "--print-config", "--seed", "11", "--out", "elsewhere"], None);
    assert_eq!(o.status.code(), Some(0));
    let cfg = wave3d_harness::config::ExperimentConfig::from_json(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert_eq!(cfg.noise.seed, 11);
    assert_eq!(cfg.out, Path::new("elsewhere"));
}

#[test]
fn silent_coefficients_give_zero_distances_and_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "zero.json",
        r#"{"replicas": 30, "solver": {"preset": "custom", "coefficients": {}}, "wz": {"lag": {"replicas": 0}}}"#,
    );
    let out = dir.path().join("out");
    let o = wave3d(&["wz-converge", "--config", &cfg, "--out", out.to_str().unwrap(), "--workers", "2"], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("wz_converge_levels_seed20240601_beta1.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells[col("localized")].parse::<f64>().unwrap(), 0.0);
        assert_eq!(cells[col("median")].parse::<f64>().unwrap(), 0.0);
    }
    let manifest: Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["replica_seeds"].as_array().unwrap().len(), 30);
    assert_eq!(manifest["workers"], 2);
    assert!(out.join("report.json").exists());
}
