use std::process::{Command, Output};

use serde_json::Value;

fn hecke(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hecke")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn ltable_on_s3() {
    let out = hecke(&["--pair", "s3-h12", "ltable", "--csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    // L, R, Δ
    assert_eq!(rows[0][2..5], ["1", "1", "1"]);
    assert_eq!(rows[1][2..5], ["2", "2", "1"]);
}

#[test]
fn growth_of_z2_counts_lattice_points() {
    let out = hecke(&["--pair", "z:2", "growth", "--rmax", "25"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let counts = v["result"]["series"]["ball_counts"].as_array().unwrap();
    assert_eq!(counts.len(), 26);
    assert_eq!(counts[25], 1301);
    assert_eq!(v["command"], "growth");
    assert_eq!(v["config"]["pair"], "z:2");
}

#[test]
fn exit_codes() {
    assert_eq!(hecke(&["--pair", "bcp:2", "rd-profile"]).status.code(), Some(4));
    assert_eq!(hecke(&["--pair", "bc", "enumerate"]).status.code(), Some(2));
    assert_eq!(hecke(&["--pair", "nope", "growth"]).status.code(), Some(2));
    assert_eq!(hecke(&["--set", "bogus=1", "growth"]).status.code(), Some(2));
    assert_eq!(hecke(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn cap_hit_still_writes_partial_artifact() {
    let out = hecke(&["--pair", "z:1", "enumerate", "--rmax", "50", "--max-cosets", "10"]);
    assert_eq!(out.status.code(), Some(3));
    let v = json(&out);
    assert_eq!(v["result"]["partial"], true);
    assert!(v["result"]["error"].is_string());
}

#[test]
fn out_dir_gets_json_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = hecke(&["--pair", "dinf", "enumerate", "--rmax", "3", "--seed", "5", "--out", d]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&std::fs::read(dir.path().join("enumerate.json")).unwrap()).unwrap();
    assert_eq!(v["seed"], 5);
    let csv = std::fs::read_to_string(dir.path().join("enumerate.csv")).unwrap();
    assert!(csv.starts_with("dc_id,rep,R,L,delta,inv\n"));
}

#[test]
fn config_file_and_set_layering() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    std::fs::write(&path, "pair = z:1\nrmax = 7\n# ignored\nseed = 3\n").unwrap();
    let p = path.to_str().unwrap();
    let v = json(&hecke(&["--config", p, "--set", "seed=9", "growth"]));
    assert_eq!(v["seed"], 9);
    assert_eq!(v["result"]["series"]["ball_counts"][7], 15);
    let v = json(&hecke(&["--config", p, "--rmax", "4", "growth"]));
    assert_eq!(v["result"]["radius"], 4);
}

#[test]
fn repeated_runs_are_identical() {
    let args = ["--pair", "psl2z1p:2", "ltable", "--rmax", "3"];
    let a = hecke(&args);
    let b = hecke(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}
