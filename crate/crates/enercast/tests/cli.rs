//! Black-box tests of the `enercast` binary: exit codes, config-file
//! merging, and cross-command interop.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_enercast"))
}

fn run_ok(args: &[&str]) {
    let out = bin().args(args).output().expect("binary runs");
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn exit_code(args: &[&str]) -> i32 {
    bin().args(args)
        .output()
        .expect("binary runs")
        .status
        .code()
        .expect("has exit code")
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(exit_code(&["train"]), 1); // missing --data and --model
    assert_eq!(exit_code(&["synth", "--profile", "warehouse", "--out", "/tmp"]), 1);
    assert_eq!(exit_code(&["no-such-command"]), 1);
    assert_eq!(exit_code(&["--help"]), 0);
}

#[test]
fn data_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    assert_eq!(
        exit_code(&[
            "train", "--data", "/nonexistent/fused.csv", "--model", "ridge",
            "--out", out.to_str().unwrap(),
        ]),
        2
    );
    // Present but malformed fused CSV.
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "timestamp,energy_wh\ngarbage\n").unwrap();
    assert_eq!(
        exit_code(&[
            "train", "--data", bad.to_str().unwrap(), "--model", "ridge",
            "--out", out.to_str().unwrap(),
        ]),
        2
    );
}

#[test]
fn pipeline_interop_and_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n).to_string_lossy().into_owned();

    // Flags may come from a JSON config file; explicit flags override it.
    let config = dir.path().join("synth.json");
    std::fs::write(&config, r#"{"profile": "hostel", "days": 14, "noise": 0.05}"#).unwrap();
    run_ok(&[
        "synth", "--config", config.to_str().unwrap(), "--profile", "academic",
        "--seed", "7", "--out", &p("raw"),
    ]);
    run_ok(&["fuse", "--data", &p("raw"), "--out", &p("fused")]);
    run_ok(&[
        "train", "--data", &p("fused/fused.csv"), "--model", "lstm",
        "--units", "8", "--dense", "3", "--epochs", "2", "--out", &p("trained"),
    ]);
    run_ok(&[
        "evaluate", "--data", &p("fused/fused.csv"),
        "--model", &p("trained/model.decm"),
        "--overlay-rows", "10", "--out", &p("report"),
    ]);

    // The config flag override took effect: manifest records academic.
    let manifest = std::fs::read_to_string(dir.path().join("raw/run_manifest.json")).unwrap();
    assert!(manifest.contains("\"profile\": \"academic\""));
    assert!(manifest.contains("\"days\": 14"));

    let report = std::fs::read_to_string(dir.path().join("report/report.csv")).unwrap();
    assert!(report.starts_with("label,r2,mae_norm,mae_wh\ntest,"));
    let overlay = std::fs::read_to_string(dir.path().join("report/overlay.csv")).unwrap();
    assert_eq!(overlay.lines().count(), 11); // header + 10 rows

    // No command mutates its inputs: the fused CSV digest is unchanged.
    let before = std::fs::read(dir.path().join("fused/fused.csv")).unwrap();
    run_ok(&[
        "ablate", "--data", &p("fused/fused.csv"), "--model", "ridge",
        "--lengths", "7,3", "--out", &p("abl"),
    ]);
    assert_eq!(before, std::fs::read(dir.path().join("fused/fused.csv")).unwrap());
    assert!(Path::new(&p("abl/ablation.csv")).exists());
}
