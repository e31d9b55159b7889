use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn dejavu(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dejavu"))
        .args(args)
        .output()
        .expect("run dejavu")
}

fn plans() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../plans")
}

#[test]
fn exact_two_opinions_h2() {
    // Two draws from a fair coin repeat with probability 1/2, a quarter per side.
    let out = dejavu(&["exact", "--counts", "1,1", "--h", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let adopt = v["profile"]["adopt_prob"].as_array().unwrap();
    for a in adopt {
        assert!((a.as_f64().unwrap() - 0.25).abs() < 1e-12);
    }
    assert!((v["profile"]["repeat_prob"].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn exact_csv_has_one_row_per_opinion() {
    let out = dejavu(&["--format", "csv", "exact", "--counts", "5,3,2", "--h", "3"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.starts_with("label,count,adopt_prob"));
}

#[test]
fn invalid_plan_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("bad.toml");
    std::fs::write(&plan, "base_seed = 1\n[protocol]\nkind = \"dejavu\"\n[grid]\nn = [10]\nh = [1]\n").unwrap();
    let out = dejavu(&["sweep", plan.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid.h"));
}

#[test]
fn bad_arguments_exit_1() {
    assert_eq!(dejavu(&["exact", "--counts", "1,x", "--h", "2"]).status.code(), Some(1));
    assert_eq!(dejavu(&["verify", "nope"]).status.code(), Some(1));
    assert_eq!(dejavu(&["--help"]).status.code(), Some(0));
}

#[test]
fn verify_small_suite_passes() {
    let out = dejavu(&["verify", "envelopes", "--instances", "50", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 1);
}

#[test]
fn simulate_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let plan = plans().join("small.toml");
    let out = dejavu(&["simulate", plan.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["trials.csv", "trace.csv", "summary.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let trials = std::fs::read_to_string(dir.path().join("trials.csv")).unwrap();
    assert_eq!(trials.lines().filter(|l| !l.starts_with('#')).count(), 11);
}

#[test]
fn seed_override_changes_trials() {
    let plan = plans().join("small.toml");
    let run = |seed: &str| {
        let dir = tempfile::tempdir().unwrap();
        let out = dejavu(&["sweep", plan.to_str().unwrap(), "--seed", seed, "--out-dir", dir.path().to_str().unwrap()]);
        assert!(out.status.success());
        std::fs::read_to_string(dir.path().join("trials.csv")).unwrap()
    };
    assert_eq!(run("7"), run("7"));
    assert_ne!(run("7"), run("8"));
}
