//! End-to-end tests of the binary: artifact layout, exit codes, determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_vortexpin")
}

fn outdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("vortexpin-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display())))
        .unwrap()
}

#[test]
fn radial_reports_lambda_ordering_flag() {
    let dir = outdir("radial");
    let out = run(&["--out", dir.to_str().unwrap(), "radial", "--R", "0.55", "--a", "0.01"]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let doc = read_json(&dir.join("radial.json"));
    assert_eq!(doc["data"]["lambda2_below_lambda1"], serde_json::json!(true));
    assert!(doc["data"]["holds"].as_bool().unwrap());
    assert!(dir.join("radial_profile.csv").exists());
}

#[test]
fn sweep_writes_rows_and_monotonicity_report() {
    let dir = outdir("sweep");
    let out = run(&[
        "--out",
        dir.to_str().unwrap(),
        "sweep",
        "--nx",
        "48",
        "--factors",
        "0.8,0.95,1.1,1.4",
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let doc = read_json(&dir.join("sweep.json"));
    let rows = doc["data"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(doc["data"]["nesting_violations"], serde_json::json!(0));
    assert!(rows[0]["mu_mass"].as_f64().unwrap() < 1e-6);
    assert!(rows[3]["mu_mass"].as_f64().unwrap() > 1e-3);
}

#[test]
fn malformed_config_exits_2_without_outputs() {
    let dir = outdir("badcfg");
    let cfg = dir.join("run.cfg");
    std::fs::write(&cfg, "domain.nx = 48\nsolver.omgea = 1.4\n").unwrap();
    let out = run(&["--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap(), "solve-h0"]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(!dir.join("h0.json").exists());
    assert!(!dir.join("h0.csv").exists());
}

#[test]
fn invalid_domain_exits_2() {
    let out = run(&["obstacle", "--R", "0.99", "--a", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn identical_config_and_seed_reproduce_outputs() {
    let strip_wall_time = |mut v: serde_json::Value| {
        v.as_object_mut().unwrap().remove("wall_time_s");
        v
    };
    let dir = outdir("det");
    let mut docs = Vec::new();
    for _ in 0..2 {
        let out = run(&[
            "--out",
            dir.to_str().unwrap(),
            "--seed",
            "42",
            "obstacle",
            "--nx",
            "48",
            "--lambda-factor",
            "1.6",
            "--probe-trials",
            "5",
        ]);
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
        docs.push(strip_wall_time(read_json(&dir.join("obstacle.json"))));
    }
    assert_eq!(docs[0], docs[1]);
    assert_eq!(docs[0]["data"]["minimality"]["violations"], serde_json::json!(0));
}

#[test]
fn solve_h0_writes_field_and_thresholds() {
    let dir = outdir("h0");
    let cfg = dir.join("run.cfg");
    std::fs::write(
        &cfg,
        "domain.inclusion_radius = 0.5\ndomain.a = 0.5\ndomain.nx = 48\ndomain.ny = 48\n",
    )
    .unwrap();
    let out = run(&["--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap(), "solve-h0"]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let doc = read_json(&dir.join("h0.json"));
    let l0 = doc["data"]["lambda0"].as_f64().unwrap();
    assert!(l0 > 1.0 && l0 < 10.0);
    assert!(doc["grid_hash"].is_string());
    let csv = std::fs::read_to_string(dir.join("h0.csv")).unwrap();
    assert!(csv.starts_with("x,y,value\n"));
    assert!(dir.join("h0.csv.meta.json").exists());
}

#[test]
fn ueps_rejects_unresolved_layer() {
    // 48² has h = 2/48 > ε/2 for ε = 0.05: solver-class failure, exit 1
    let out = run(&["ueps", "--nx", "48", "--eps", "0.05"]);
    assert_eq!(out.status.code(), Some(1), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn ueps_reports_bounds_and_decay() {
    let dir = outdir("ueps");
    let out = run(&["--out", dir.to_str().unwrap(), "ueps", "--nx", "64", "--eps", "0.1"]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let doc = read_json(&dir.join("ueps.json"));
    let row = &doc["data"]["runs"][0];
    assert!(row["bounds_ok"].as_bool().unwrap());
    assert!(row["delta_hat"].as_f64().unwrap() > 0.0);
    assert!(dir.join("u_eps_0.csv").exists());
}

#[test]
fn green_columns_with_eps_comparison() {
    let dir = outdir("green");
    let out = run(&[
        "--out",
        dir.to_str().unwrap(),
        "green",
        "--nx",
        "64",
        "--source",
        "0.0,0.0",
        "--eps",
        "0.1",
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let doc = read_json(&dir.join("green.json"));
    let col = &doc["data"]["columns"][0];
    assert!(col["sup_diff_off_diagonal"].as_f64().unwrap() < 0.1);
    assert!(dir.join("green0_0.csv").exists());
    assert!(dir.join("green_eps_0.csv").exists());
}

#[test]
fn env_var_overrides_output_dir() {
    let dir = outdir("envout");
    let out = Command::new(bin())
        .env("VORTEXPIN_OUT", &dir)
        .args(["radial", "--R", "0.6", "--a", "0.5"])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.join("radial.json").exists());
}

#[test]
fn accept_desk_scale_writes_jsonl() {
    let dir = outdir("accept");
    let out = run(&["--out", dir.to_str().unwrap(), "accept", "--scale", "desk"]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.join("acceptance.jsonl")).unwrap();
    let lines: Vec<serde_json::Value> =
        text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 10);
    for line in &lines {
        assert!(line["passed"].as_bool().unwrap(), "criterion failed at desk scale: {line}");
    }
}
