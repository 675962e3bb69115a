use std::path::Path;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_isotheta")
}

fn run_job(cmd: &str, job_text: &str, dir: &Path) -> Output {
    let job = dir.join("job.json");
    std::fs::write(&job, job_text).unwrap();
    let out = dir.join("out");
    Command::new(bin())
        .arg(cmd)
        .arg("--job")
        .arg(&job)
        .arg("--out")
        .arg(&out)
        .output()
        .expect("binary runs")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn malformed_job_reports_the_position() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_job("periods", "{\"command\": \"periods\",\n  \"curve\": [[0,0],", dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_of(&out);
    assert!(err.contains("line 2"), "stderr: {err}");
}

#[test]
fn unknown_fields_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_job(
        "periods",
        r#"{"command": "periods", "curve": [[0,0],[1,0],[2,0],[3,0]], "extra": 1}"#,
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("unknown field"));
}

#[test]
fn coincident_points_name_their_indices() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_job(
        "periods",
        r#"{"command": "periods", "curve": [[0,0],[1,0],[1,0],[3,0]]}"#,
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_of(&out);
    assert!(err.contains("1 and 2"), "stderr: {err}");
}

#[test]
fn odd_point_counts_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_job(
        "periods",
        r#"{"command": "periods", "curve": [[0,0],[1,0],[2,0]]}"#,
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn command_field_must_match_the_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_job(
        "periods",
        r#"{"command": "theta", "curve": [[0,0],[1,0],[2,0],[3,0]]}"#,
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("theta"));
}

#[test]
fn equally_spaced_periods_match_the_pinned_module() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_job(
        "periods",
        r#"{"command": "periods", "curve": [[0,0],[1,0],[2,0],[3,0]]}"#,
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/results.json")).unwrap())
            .unwrap();
    let b = &report["b_matrix"][0][0];
    assert!(b[0].as_f64().unwrap().abs() < 1e-9);
    assert!((b[1].as_f64().unwrap() - 1.2792615711710064).abs() < 1e-9);
    assert_eq!(report["passed"], serde_json::Value::Bool(true));
}

#[test]
fn sample_grids_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let job = r#"{
        "command": "pvi",
        "characteristic": {"p": [0.31], "q": [0.17]},
        "grid": {"center": [1.39, 0.42], "radius": 0.1, "count": 5},
        "seed": 11
    }"#;
    let first = run_job("pvi", job, dir.path());
    assert_eq!(first.status.code(), Some(0), "stderr: {}", stderr_of(&first));
    let json1 = std::fs::read(dir.path().join("out/results.json")).unwrap();
    let csv1 = std::fs::read_to_string(dir.path().join("out/samples.csv")).unwrap();

    let dir2 = tempfile::tempdir().unwrap();
    let second = run_job("pvi", job, dir2.path());
    assert_eq!(second.status.code(), Some(0));
    let json2 = std::fs::read(dir2.path().join("out/results.json")).unwrap();
    let csv2 = std::fs::read_to_string(dir2.path().join("out/samples.csv")).unwrap();

    assert_eq!(json1, json2);
    assert_eq!(csv1, csv2);
    let mut lines = csv1.lines();
    assert_eq!(lines.next(), Some("t_re,t_im,y_re,y_im,residual"));
    assert_eq!(lines.count(), 5);
}

#[test]
fn unreachable_tolerances_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_job(
        "solve",
        r#"{
            "command": "solve",
            "curve": [[0,0],[1,0],[2,0],[3,0]],
            "characteristic": {"p": [0.31], "q": [0.17]},
            "tolerances": {"validation": 1e-18}
        }"#,
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/results.json")).unwrap())
            .unwrap();
    assert_eq!(report["passed"], serde_json::Value::Bool(false));
}

#[test]
fn half_integer_characteristics_are_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_job(
        "solve",
        r#"{
            "command": "solve",
            "curve": [[0,0],[1,0],[2,0],[3,0]],
            "characteristic": {"p": [0.5], "q": [0.0]}
        }"#,
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("half integer"));
}

#[test]
fn verify_reports_every_check_on_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_job(
        "verify",
        r#"{"command": "verify", "seed": 3, "suites": ["periods", "theta"]}"#,
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.lines().filter(|l| l.starts_with("VERIFY")).count() >= 8);
    assert!(stdout.contains("PASS"));
    assert!(!stdout.contains("FAIL"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/results.json")).unwrap())
            .unwrap();
    assert_eq!(report["passed"], serde_json::Value::Bool(true));
}

#[test]
fn monodromy_command_closes_the_loop() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_job(
        "monodromy",
        r#"{
            "command": "monodromy",
            "curve": [[0,0],[1,0],[2,0],[3,0]],
            "characteristic": {"p": [0.31], "q": [0.17]}
        }"#,
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/results.json")).unwrap())
            .unwrap();
    assert!(report["cyclic_defect"].as_f64().unwrap() < 1e-6);
    assert_eq!(report["degenerate_comparison"], serde_json::Value::Bool(false));
}
