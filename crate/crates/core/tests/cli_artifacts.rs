use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use mfsc::cli::{eta_file_name, parse_config, run_experiment, ExperimentConfig, MOMENTS_HEADER, SWEEP_HEADER};

const TINY: &str = include_str!("golden/tiny.cfg");

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = fs::remove_dir_all(&dir);
    dir
}

fn tiny(out: &Path) -> ExperimentConfig {
    let mut cfg = parse_config(TINY, ExperimentConfig::default()).unwrap();
    cfg.out_dir = out.to_path_buf();
    cfg
}

#[test]
fn tiny_config_matches_golden_artifacts() {
    let out = scratch("golden");
    let result = run_experiment(&tiny(&out)).unwrap();
    assert_eq!(result.grid_points, 13);
    assert_eq!(
        fs::read_to_string(out.join("sweep.csv")).unwrap(),
        include_str!("golden/tiny_sweep.csv")
    );
    assert_eq!(
        fs::read_to_string(out.join("reference.csv")).unwrap(),
        include_str!("golden/tiny_reference.csv")
    );
    for eta in [4.0, 0.5, 0.5f64.powi(16)] {
        let text = fs::read_to_string(out.join(eta_file_name(eta))).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(MOMENTS_HEADER));
        assert_eq!(lines.count(), 9);
    }
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("run.json")).unwrap()).unwrap();
    assert_eq!(meta["n"], 4);
    assert_eq!(meta["steps"], 4);
    assert_eq!(meta["grid_points"], 13);
    assert!(meta["wall_seconds"]["total"].as_f64().unwrap() >= 0.0);
    assert!(!out.join("FAILED").exists());
}

#[test]
fn rerun_overwrites_with_identical_content() {
    let out = scratch("rerun");
    run_experiment(&tiny(&out)).unwrap();
    let first = fs::read(out.join("sweep.csv")).unwrap();
    let first_ref = fs::read(out.join("reference.csv")).unwrap();
    run_experiment(&tiny(&out)).unwrap();
    assert_eq!(first, fs::read(out.join("sweep.csv")).unwrap());
    assert_eq!(first_ref, fs::read(out.join("reference.csv")).unwrap());
}

#[test]
fn binary_quick_single_eta() {
    let out = scratch("quick");
    let status = Command::new(env!("CARGO_BIN_EXE_mfsc"))
        .args(["--quick", "--eta", "(1/2)^16", "--out"])
        .arg(&out)
        .env("RUST_LOG", "error")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let sweep = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = sweep.lines().collect();
    assert_eq!(lines[0], SWEEP_HEADER);
    assert_eq!(lines.len(), 2);
    let cols: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(cols.len(), 7);
    assert_eq!(cols[1], "401");
    assert_eq!(cols[2], "0");
    for c in &cols[3..] {
        assert_eq!(c.parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn binary_usage_errors_exit_with_one() {
    let out = scratch("usage");
    let run = |args: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_mfsc"))
            .args(args)
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap()
    };
    let bad_eta = run(&["--quick", "--eta=-1"]);
    assert_eq!(bad_eta.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad_eta.stderr).contains("`eta`"));

    let cfg = scratch("usage_cfg");
    fs::create_dir_all(&cfg).unwrap();
    let path = cfg.join("bad.cfg");
    fs::write(&path, "n = 8\nk = 0.3\n").unwrap();
    let bad_k = run(&["--config", path.to_str().unwrap()]);
    assert_eq!(bad_k.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad_k.stderr).contains("`k`"));

    assert_eq!(run(&["--no-such-flag"]).status.code(), Some(1));
    assert!(!out.join("sweep.csv").exists());
}
