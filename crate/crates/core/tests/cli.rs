use std::path::PathBuf;
use std::process::Command;

fn qftlab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qftlab"))
}

fn bundled(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

#[test]
fn binary_exits_zero_and_prints_each_suite() {
    let out = tempfile::tempdir().unwrap();
    let result = qftlab()
        .args(["rp-check", "--config"])
        .arg(bundled("free_field_reference.json"))
        .arg("--out")
        .arg(out.path())
        .output()
        .unwrap();
    assert_eq!(result.status.code(), Some(0), "{}", String::from_utf8_lossy(&result.stderr));
    let stdout = String::from_utf8(result.stdout).unwrap();
    for suite in ["sphere_operator", "sphere_gram", "reflection_positivity"] {
        assert!(stdout.lines().any(|l| l.starts_with(suite) && l.contains("PASS")), "{stdout}");
    }
    assert!(out.path().join("report.jsonl").is_file());
    assert!(out.path().join("summary.csv").is_file());
}

#[test]
fn binary_exits_two_and_names_the_bad_key() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(bundled("free_field_reference.json")).unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, text.replace("\"mass\": 1.0", "\"mass\": -1.0")).unwrap();
    let result = qftlab()
        .args(["invariance", "--config"])
        .arg(&bad)
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(result.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&result.stderr).contains("experiment.mass"));
}

#[test]
fn failing_suite_exits_one() {
    // k · width rises from k = 1 to k = 2, so the width suite fails
    let out = tempfile::tempdir().unwrap();
    let result = qftlab()
        .args(["mollifier-info", "--config"])
        .arg(bundled("free_field_reference.json"))
        .arg("--out")
        .arg(out.path())
        .output()
        .unwrap();
    assert_eq!(result.status.code(), Some(1));
    let summary = std::fs::read_to_string(out.path().join("summary.csv")).unwrap();
    assert!(summary.lines().any(|l| l.starts_with("width_monotone,FAIL")), "{summary}");
}

#[test]
fn unknown_command_is_rejected_by_the_parser() {
    let result = qftlab().args(["teleport", "--config", "x", "--out", "y"]).output().unwrap();
    assert_eq!(result.status.code(), Some(2));
}
