use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use homog_core::lattice::{CoefficientField, NeighborSet};
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_homog-lab"));
    c.env_remove("HOMOG_LAB_JOBS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn uniform_field(dir: &Path) -> PathBuf {
    let path = dir.join("field.json");
    CoefficientField::uniform(NeighborSet::nearest(2), 1.0).unwrap().write(&path).unwrap();
    path
}

fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn surface_rows_for_axis_direction() {
    let dir = TempDir::new().unwrap();
    let field = uniform_field(dir.path());
    let out = run(&["surface", "--field", field.to_str().unwrap(), "--nu", "0,1", "--sizes", "4,8"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("T,nu_1,nu_2,phi_T,cut_edges,solve_ms\n"));
    let rows = rows(&text);
    assert_eq!(rows.len(), 2);
    for r in rows {
        assert_eq!(r[3].parse::<f64>().unwrap(), 1.0);
    }
}

#[test]
fn decreasing_sizes_are_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let field = uniform_field(dir.path());
    let out = run(&["surface", "--field", field.to_str().unwrap(), "--nu", "0,1", "--sizes", "8,4"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sizes must be strictly increasing"));
}

#[test]
fn every_violation_is_listed() {
    let out = run(&["bulk", "--field", "/nonexistent/field.json", "--zeta", "2,x", "--sizes", "4,4"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("file not found"));
    assert!(err.contains("--zeta: malformed list"));
    assert!(err.contains("sizes must be strictly increasing"));
}

#[test]
fn unknown_flags_exit_with_usage_status() {
    assert_eq!(run(&["surface", "--frobnicate"]).status.code(), Some(2));
}

#[test]
fn bulk_matches_closed_form() {
    let dir = TempDir::new().unwrap();
    let field = uniform_field(dir.path());
    let out = run(&["bulk", "--zeta", "2,1", "--field", field.to_str().unwrap(), "--sizes", "4,8"]);
    assert!(out.status.success());
    for r in rows(&String::from_utf8(out.stdout).unwrap()) {
        assert!((r[3].parse::<f64>().unwrap() - 5.0).abs() < 1e-8);
    }
}

#[test]
fn slope_dimension_must_match_field() {
    let dir = TempDir::new().unwrap();
    let field = uniform_field(dir.path());
    let out = run(&["bulk", "--zeta", "2,1,0", "--field", field.to_str().unwrap(), "--sizes", "4"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dimension 2"));
}

#[test]
fn exact_membrane_refusal_reports_json() {
    let dir = TempDir::new().unwrap();
    let field = uniform_field(dir.path());
    let out = run(&["bulk", "--zeta", "0.1,0", "--field", field.to_str().unwrap(), "--sizes", "8", "--exact-membrane"]);
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["schema"], 1);
}

#[test]
fn output_is_byte_identical_across_runs_and_thread_counts() {
    let dir = TempDir::new().unwrap();
    let field = uniform_field(dir.path());
    let mut outputs = Vec::new();
    for jobs in ["1", "4"] {
        let path = dir.path().join(format!("sweep{jobs}.csv"));
        let status = bin()
            .args(["surface", "--field", field.to_str().unwrap(), "--sweep", "6", "--sizes", "4,6"])
            .args(["--out", path.to_str().unwrap()])
            .env("HOMOG_LAB_JOBS", jobs)
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push(fs::read(&path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(rows(&String::from_utf8(outputs[0].clone()).unwrap()).len(), 12);
}

#[test]
fn segment_writes_values_lines_and_trace() {
    let dir = TempDir::new().unwrap();
    let field_path = dir.path().join("path.json");
    CoefficientField::uniform(NeighborSet::nearest(1), 1.0).unwrap().write(&field_path).unwrap();
    let input = dir.path().join("signal.csv");
    let mut text = String::from("x1,value\n");
    for i in 0..20 {
        text.push_str(&format!("{},{}\n", i as f64 * 0.05, if i < 10 { 0.0 } else { 2.0 }));
    }
    fs::write(&input, text).unwrap();
    let (u, lines, trace) = (dir.path().join("u.csv"), dir.path().join("lines.csv"), dir.path().join("trace.json"));
    let out = run(&[
        "segment",
        "--input", input.to_str().unwrap(),
        "--field", field_path.to_str().unwrap(),
        "--eps", "0.05",
        "--weight", "50",
        "--gnc",
        "--out", u.to_str().unwrap(),
        "--lines", lines.to_str().unwrap(),
        "--trace", trace.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read_to_string(&u).unwrap().lines().count(), 21);
    let broken = rows(&fs::read_to_string(&lines).unwrap()).iter().filter(|r| r[2] == "1").count();
    assert_eq!(broken, 1);
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&trace).unwrap()).unwrap();
    assert_eq!(doc["schema"], 1);
    assert_eq!(doc["broken_bond_count"], 1);
    assert!(!doc["trace"].as_array().unwrap().is_empty());
}

#[test]
fn energy_reports_json() {
    let dir = TempDir::new().unwrap();
    let field_path = dir.path().join("path.json");
    CoefficientField::uniform(NeighborSet::nearest(1), 1.0).unwrap().write(&field_path).unwrap();
    let input = dir.path().join("u.csv");
    fs::write(&input, "x1,value\n0,0\n1,10\n").unwrap();
    let out = run(&["energy", "--input", input.to_str().unwrap(), "--field", field_path.to_str().unwrap(), "--eps", "1"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["total"], 1.0);
    assert_eq!(doc["broken_bond_count"], 1);
}

#[test]
fn wulff_reports_axis_values() {
    let dir = TempDir::new().unwrap();
    let field = uniform_field(dir.path());
    let out = run(&["wulff", "--field", field.to_str().unwrap(), "--dirs", "4", "--size", "8"]);
    assert!(out.status.success());
    for r in rows(&String::from_utf8(out.stdout).unwrap()) {
        assert_eq!(r[2].parse::<f64>().unwrap(), 1.0);
    }
}

#[test]
fn verify_passes_on_seed_zero() {
    let out = run(&["verify", "--seed", "0"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().all(|l| l.starts_with("PASS")));
}

#[test]
fn field_files_round_trip() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("diag.json");
    let field = CoefficientField::alternating_diagonal(true);
    field.write(&path).unwrap();
    assert_eq!(CoefficientField::read(&path).unwrap(), field);
}
