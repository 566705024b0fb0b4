//! End-to-end checks of the `catamp` binary: exit codes and output files.

use std::path::Path;
use std::process::{Command, Output};

fn catamp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_catamp")).args(args).output().expect("spawn catamp")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn list_names_every_experiment() {
    let out = catamp(&["list"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    for name in ["fig2", "fig8", "eq41-clicks", "qnd-check", "attempts"] {
        assert!(text.contains(name), "{name} missing from list");
    }
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&catamp(&["--bogus"])), 2);
    assert_eq!(code(&catamp(&["run", "fig5"])), 2);
    assert_eq!(code(&catamp(&["run", "fig2", "--set", "alpha_max"])), 2);
    assert_eq!(code(&catamp(&["run", "fig2", "--set", "nope=1"])), 2);
    assert_eq!(code(&catamp(&["run", "fig2", "--dim", "4"])), 2);
    assert_eq!(code(&catamp(&["run"])), 2);
    assert_eq!(code(&catamp(&["verify-all", "--only", "99"])), 2);
    assert_eq!(code(&catamp(&["--jobs", "0", "list"])), 2);
}

#[test]
fn run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("runs");
    let out = catamp(&["--jobs", "1", "run", "attempts", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("attempts.csv").is_file());
    assert!(out_dir.join("summary.json").is_file());
    assert!(stdout(&out).contains("PASS"));
}

#[test]
fn run_from_config_file_with_cli_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("fig2.json");
    let out_dir = dir.path().join("o");
    std::fs::write(
        &cfg,
        format!(
            r#"{{"experiment": "fig2", "dim": 20, "overrides": {{"alpha_max": 1.0}}, "output_dir": {:?}}}"#,
            out_dir.to_str().unwrap()
        ),
    )
    .unwrap();
    let out = catamp(&["run", "--config", cfg.to_str().unwrap(), "--set", "step=0.5"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("fig2.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3);

    std::fs::write(&cfg, r#"{"experiment": "fig2", "colour": 1}"#).unwrap();
    assert_eq!(code(&catamp(&["run", "--config", cfg.to_str().unwrap()])), 2);
}

#[test]
fn verify_all_reports_pass_and_fail() {
    let ok = catamp(&["verify-all", "--only", "4"]);
    assert_eq!(code(&ok), 0);
    assert!(stdout(&ok).contains("1 of 1 criteria passed"));
    let bad = catamp(&["verify-all", "--only", "7"]);
    assert_eq!(code(&bad), 1);
    assert!(stdout(&bad).contains("FAIL"));
}

fn tree_csv(dir: &Path, json: &str) -> (i32, Option<String>) {
    let cfg = dir.join("tree.json");
    let out = dir.join("tree.csv");
    std::fs::write(&cfg, json).unwrap();
    let run = catamp(&["tree", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    (code(&run), std::fs::read_to_string(out).ok())
}

#[test]
fn tree_from_odd_cats_doubles_the_amplitude() {
    let dir = tempfile::tempdir().unwrap();
    let (status, csv) = tree_csv(
        dir.path(),
        r#"{"alpha_i": 1.0, "source": {"kind": "css", "phase": 3.141592653589793}, "stages": 2, "dim": 24}"#,
    );
    assert_eq!(status, 0);
    let csv = csv.unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "stage,prob,fidelity,purity,amplitude");
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|f| f.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 3);
    let last = &rows[2];
    assert!((last[4] - 2.0).abs() < 1e-12);
    assert!((0.0..=1.0).contains(&last[1]));
    assert!(last[2] > 0.99);
}

#[test]
fn tree_rejects_malformed_config() {
    let dir = tempfile::tempdir().unwrap();
    let (status, csv) = tree_csv(dir.path(), r#"{"alpha_i": 1.0, "source": {"kind": "laser"}, "stages": 1}"#);
    assert_eq!(status, 2);
    assert!(csv.is_none());
}
