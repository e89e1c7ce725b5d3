use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};
use tempfile::TempDir;

fn semilab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semilab")).args(args).output().expect("binary runs")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut all = args.to_vec();
    let out = dir.to_str().unwrap();
    all.extend(["--out", out]);
    semilab(&all)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

fn hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn assert_passes(o: &Output) {
    assert_eq!(o.status.code(), Some(0), "stdout:\n{}\nstderr:\n{}", stdout(o), stderr(o));
    assert!(!stdout(o).contains("FAIL"), "{}", stdout(o));
}

#[test]
fn registry_command_prints_the_default_manifest() {
    let o = semilab(&["registry"]);
    assert_eq!(o.status.code(), Some(0));
    let m: Value = serde_json::from_slice(&o.stdout).unwrap();
    let entries = m["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 7);
    let lengths: Vec<u64> = entries.iter().map(|e| e["code_length"].as_u64().unwrap()).collect();
    assert_eq!(lengths, [1, 2, 3, 4, 5, 6, 7]);
    assert_eq!(entries[5]["is_measure"], Value::Bool(false));
}

#[test]
fn unknown_experiment_is_an_error() {
    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), &["run", "solomonoff"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown experiment 'solomonoff'"), "{}", stderr(&o));
}

#[test]
fn malformed_config_is_an_error() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"horizon": 5, "colour": "red"}"#).unwrap();
    let o = run_in(&dir.path().join("out"), &["run", "lemma1-bounds", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("colour"), "{}", stderr(&o));
}

#[test]
fn flags_override_the_config_file() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"horizon": 24, "seed": 5, "stages": 32}"#).unwrap();
    let out = dir.path().join("out");
    let o = run_in(&out, &["run", "solomonoff-convergence", "--config", cfg.to_str().unwrap(), "--seed", "7"]);
    assert_passes(&o);
    let r = json(&out.join("result.json"));
    assert_eq!((r["seed"].as_u64(), r["horizon"].as_u64()), (Some(7), Some(24)));
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["config"]["stages"].as_u64(), Some(32));
    let rows = fs::read_to_string(out.join("hellinger.csv")).unwrap().lines().count();
    assert_eq!(rows, 25);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = TempDir::new().unwrap();
    let args = ["run", "solomonoff-convergence", "--horizon", "40", "--seed", "11"];
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_passes(&run_in(&a, &args));
    assert_passes(&run_in(&b, &args));
    let (ma, mb) = (json(&a.join("manifest.json")), json(&b.join("manifest.json")));
    assert_eq!(ma["files"], mb["files"]);
    for f in ma["files"].as_array().unwrap() {
        let name = f["path"].as_str().unwrap();
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    let other = dir.path().join("c");
    assert_passes(&run_in(&other, &["run", "solomonoff-convergence", "--horizon", "40", "--seed", "12"]));
    assert_ne!(fs::read(a.join("hellinger.csv")).unwrap(), fs::read(other.join("hellinger.csv")).unwrap());
}

#[test]
fn manifest_lists_every_file_with_digest_and_columns() {
    let dir = TempDir::new().unwrap();
    assert_passes(&run_in(dir.path(), &["run", "lemma1-bounds"]));
    let m = json(&dir.path().join("manifest.json"));
    let files = m["files"].as_array().unwrap();
    let mut listed: Vec<&str> = files.iter().map(|f| f["path"].as_str().unwrap()).collect();
    listed.push("manifest.json");
    listed.sort();
    let mut on_disk: Vec<String> =
        fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    on_disk.sort();
    assert_eq!(listed, on_disk);
    for f in files {
        let bytes = fs::read(dir.path().join(f["path"].as_str().unwrap())).unwrap();
        assert_eq!(f["sha256"].as_str().unwrap(), hex(&bytes));
        assert_eq!(f["bytes"].as_u64().unwrap(), bytes.len() as u64);
        if f["kind"] == "csv" {
            let header = String::from_utf8(bytes.clone()).unwrap().lines().next().unwrap().to_string();
            let cols = f["columns"].as_array().unwrap();
            let names: Vec<&str> = cols.iter().map(|c| c["name"].as_str().unwrap()).collect();
            assert_eq!(header, names.join(","));
            assert!(cols.iter().all(|c| !c["doc"].as_str().unwrap().is_empty()));
        }
        if f["kind"] == "gnuplot" {
            let script = String::from_utf8(bytes).unwrap();
            let csv = f["path"].as_str().unwrap().replace(".gp", ".csv");
            assert!(listed.contains(&csv.as_str()) && script.contains(&format!("'{csv}'")));
        }
    }
    assert!(files.iter().filter(|f| f["kind"] == "gnuplot").count() >= 4);
    let r = json(&dir.path().join("result.json"));
    assert_eq!(r["experiment"], "lemma1-bounds");
    assert!(r["verdicts"].as_array().unwrap().iter().all(|v| v["passed"] == Value::Bool(true)));
}

#[test]
fn cubic_product_limit() {
    let dir = TempDir::new().unwrap();
    assert_passes(&run_in(dir.path(), &["run", "poly3-limit"]));
    let r = json(&dir.path().join("result.json"));
    let p: f64 = r["bounds"]["final_partial_product"].as_str().unwrap().parse().unwrap();
    assert!((p - 0.450).abs() < 1e-3, "{p}");
}

#[test]
fn counterexample_alpha_and_its_01_positions() {
    let dir = TempDir::new().unwrap();
    assert_passes(&run_in(dir.path(), &["run", "counterexample"]));
    let r = json(&dir.path().join("result.json"));
    let alpha = r["bounds"]["alpha"].as_str().unwrap();
    assert_eq!(alpha.len(), 30);
    let b = alpha.as_bytes();
    let expected: Vec<u64> = (1..b.len()).filter(|&n| b[n - 1] == b'0' && b[n] == b'1').map(|n| n as u64).collect();
    let got: Vec<u64> =
        r["bounds"]["zero_one_positions"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
    assert_eq!(got, expected);
    assert_eq!(&got[..3], [2, 6, 9]);
}

#[test]
fn remaining_experiments_pass_on_small_settings() {
    let dir = TempDir::new().unwrap();
    for (name, extra) in [
        ("prop1", vec!["--horizon", "60"]),
        ("prop2", vec!["--horizon", "40", "--stages", "120"]),
        ("anti-dominance", vec![]),
    ] {
        let mut args = vec!["run", name];
        args.extend(extra);
        let out = dir.path().join(name);
        assert_passes(&run_in(&out, &args));
        assert!(out.join("result.json").exists());
    }
}

#[test]
fn prop2_flags_unconverged_stages() {
    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), &["run", "prop2", "--horizon", "40", "--stages", "40"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL staged measure entries within tolerance"), "{}", stdout(&o));
}

#[test]
fn verify_passes_on_the_default_registry() {
    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), &["verify"]);
    assert_passes(&o);
    let report = fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert_eq!(report.lines().count(), 15);
    assert!(report.lines().all(|l| l.starts_with("PASS ")));
    assert!(stderr(&o).is_empty(), "{}", stderr(&o));
}

#[test]
fn low_precision_warns() {
    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), &["run", "lemma1-bounds", "--precision", "30"]);
    assert!(stderr(&o).contains("warning: precision 30 bits"), "{}", stderr(&o));
}

#[test]
fn verify_rejects_a_non_measure_flagged_as_measure() {
    let dir = TempDir::new().unwrap();
    let mut m: Value = serde_json::from_slice(&semilab(&["registry"]).stdout).unwrap();
    m["entries"][5]["is_measure"] = Value::Bool(true);
    let reg = dir.path().join("registry.json");
    fs::write(&reg, serde_json::to_vec_pretty(&m).unwrap()).unwrap();
    let o = run_in(&dir.path().join("out"), &["verify", "--registry", reg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stderr(&o).contains("first failure: FAIL measure flags"), "{}", stderr(&o));
}
