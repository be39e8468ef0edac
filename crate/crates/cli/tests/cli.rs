//! End-to-end behavior of the `qm` binary: documented examples, exit
//! codes, artifact shapes, and the config-file route.

use std::path::Path;
use std::process::Command;

fn qm(dir: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_qm"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn qm")
}

fn stdout_line(output: &std::process::Output) -> String {
    String::from_utf8_lossy(&output.stdout).trim_end().to_string()
}

fn stderr_text(output: &std::process::Output) -> String {
    String::from_utf8_lossy(&output.stderr).to_string()
}

#[test]
fn eval_documented_example_prints_3() {
    let dir = tempfile::tempdir().unwrap();
    let output = qm(
        dir.path(),
        &["eval", "--space", "f2:radius=6", "--w", "ab", "--W", "1", "--g", "ababab"],
    );
    assert_eq!(output.status.code(), Some(0), "{}", stderr_text(&output));
    assert_eq!(stdout_line(&output), "3");
}

#[test]
fn delta_documented_example_prints_0() {
    let dir = tempfile::tempdir().unwrap();
    let output = qm(dir.path(), &["delta", "--space", "f2:radius=4", "--triples", "all"]);
    assert_eq!(output.status.code(), Some(0), "{}", stderr_text(&output));
    assert_eq!(stdout_line(&output), "0");
}

#[test]
fn certificate_documented_example_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let output = qm(
        dir.path(),
        &["certificate", "--g1", "a", "--g2", "b", "--schedule", "default", "--count", "2"],
    );
    assert_eq!(output.status.code(), Some(0), "{}", stderr_text(&output));
    assert_eq!(stdout_line(&output), "accepted");
    let report = std::fs::read_to_string(dir.path().join("certificate.json")).unwrap();
    for key in ["\"tool\"", "\"config\"", "\"seed\"", "\"oracle_checked\"", "\"accepted\""] {
        assert!(report.contains(key), "missing {key}");
    }
}

#[test]
fn usage_errors_exit_1_and_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let bad_credit = qm(
        dir.path(),
        &["eval", "--space", "f2:radius=4", "--w", "ab", "--W", "9", "--g", "ab"],
    );
    assert_eq!(bad_credit.status.code(), Some(1));
    assert!(stderr_text(&bad_credit).contains("field `W`"));

    let wrong_space = qm(
        dir.path(),
        &["defect", "--space", "farey:q=10", "--w", "ab", "--bound", "2"],
    );
    assert_eq!(wrong_space.status.code(), Some(1));
    assert!(stderr_text(&wrong_space).contains("field `space`"));

    let missing_flag = qm(dir.path(), &["eval", "--space", "f2:radius=4", "--w", "ab"]);
    assert_eq!(missing_flag.status.code(), Some(1));

    let bad_mode = qm(
        dir.path(),
        &["delta", "--space", "f2:radius=3", "--triples", "most"],
    );
    assert_eq!(bad_mode.status.code(), Some(1));
    assert!(stderr_text(&bad_mode).contains("field `triples`"));
}

#[test]
fn computation_failures_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let output = Command::new(env!("CARGO_BIN_EXE_qm"))
        .args(["eval", "--space", "f2:radius=4", "--w", "ab", "--W", "1", "--g", "ab"])
        .env("QM_BUDGET_CAP", "10")
        .current_dir(dir.path())
        .output()
        .expect("spawn qm");
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_text(&output).contains("budget"));
}

#[test]
fn help_and_version_exit_0() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(qm(dir.path(), &["--help"]).status.code(), Some(0));
    assert_eq!(qm(dir.path(), &["--version"]).status.code(), Some(0));
    assert_eq!(qm(dir.path(), &["eval", "--help"]).status.code(), Some(0));
}

#[test]
fn growth_csv_has_header_plus_n_max_rows() {
    let dir = tempfile::tempdir().unwrap();
    let output = qm(
        dir.path(),
        &[
            "growth",
            "--space",
            "f2:radius=8",
            "--w",
            "ab",
            "--W",
            "1",
            "--f",
            "ab",
            "--n-max",
            "3",
            "--csv",
            "rows.csv",
        ],
    );
    assert_eq!(output.status.code(), Some(0), "{}", stderr_text(&output));
    assert_eq!(stdout_line(&output), "1");
    let csv = std::fs::read_to_string(dir.path().join("rows.csv")).unwrap();
    assert_eq!(csv, "n,h_value\n1,1\n2,2\n3,3\n");
}

#[test]
fn oracle_check_is_recorded_in_the_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let output = qm(
        dir.path(),
        &[
            "eval",
            "--space",
            "f2:radius=5",
            "--w",
            "ab",
            "--g",
            "abab",
            "--oracle-check",
            "--out",
            "eval.json",
        ],
    );
    assert_eq!(output.status.code(), Some(0), "{}", stderr_text(&output));
    let artifact = std::fs::read_to_string(dir.path().join("eval.json")).unwrap();
    assert!(artifact.contains("\"oracle_checked\": true"));
    assert!(artifact.contains("\"truncation\": \"tree-hull-radius=5\""));
}

#[test]
fn config_file_route_matches_the_flag_route() {
    let flags_dir = tempfile::tempdir().unwrap();
    let config_dir = tempfile::tempdir().unwrap();
    let flags = qm(
        flags_dir.path(),
        &[
            "eval",
            "--space",
            "f2:radius=5",
            "--w",
            "ab",
            "--W",
            "1",
            "--g",
            "abab",
            "--out",
            "eval.json",
        ],
    );
    assert_eq!(flags.status.code(), Some(0), "{}", stderr_text(&flags));

    let config = r#"{
      "space": "f2:radius=5",
      "kind": "eval",
      "w": "ab",
      "credit": 1,
      "g": "abab",
      "out": "eval.json"
    }"#;
    std::fs::write(config_dir.path().join("run.json"), config).unwrap();
    let from_file = qm(config_dir.path(), &["run", "--config", "run.json"]);
    assert_eq!(from_file.status.code(), Some(0), "{}", stderr_text(&from_file));

    assert_eq!(stdout_line(&flags), stdout_line(&from_file));
    let artifact_flags = std::fs::read(flags_dir.path().join("eval.json")).unwrap();
    let artifact_file = std::fs::read(config_dir.path().join("eval.json")).unwrap();
    assert_eq!(artifact_flags, artifact_file);
}

#[test]
fn malformed_config_file_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), "{\"kind\": \"eval\"").unwrap();
    let output = qm(dir.path(), &["run", "--config", "bad.json"]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr_text(&output).contains("field `config`"));

    let missing = qm(dir.path(), &["run", "--config", "absent.json"]);
    assert_eq!(missing.status.code(), Some(1));
}
