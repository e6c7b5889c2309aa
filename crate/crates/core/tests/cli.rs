use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_se3-ekf"))
}

fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn list_scenarios() {
    let out = bin().arg("list-scenarios").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["example1", "example2", "experiment-replay"] {
        assert!(text.contains(name), "{text}");
    }
}

#[test]
fn run_writes_telemetry() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("out.csv");
    let out = bin()
        .args(["run", "--scenario", "experiment-replay", "--duration", "0.5", "--seed", "4", "--out"])
        .arg(&csv)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("t,truth.x1,truth.x2,truth.x3,"));
    assert_eq!(text.lines().count(), 1 + 51);
}

#[test]
fn config_flags_override_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(&dir, "c.cfg", "scenario = example2\nduration = 3\n");
    let out = bin()
        .args(["run", "--duration", "0.2", "--dt", "0.02", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("scenario: example2"), "{text}");
    assert!(text.contains("records: 11"), "{text}");
}

#[test]
fn threshold_failure_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        &dir,
        "c.cfg",
        "scenario = example1\nduration = 0.3\nacceptance.velocity_rmse_max = 1e-9\nmetrics.window_start = 0\n",
    );
    let out = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("velocity RMSE"));
}

#[test]
fn degenerate_abort_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    // A huge position gain aligns the thrust axis with the heading direction.
    let cfg = write(
        &dir,
        "c.cfg",
        "trajectory.kind = hover\ntrajectory.position = 1, 0, 0\ngains.kx = 1e9\nestimate.position = 0, 0, 0\nestimate.velocity = 0, 0, 0\n",
    );
    let out = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("aborted"));
}

#[test]
fn config_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(&dir, "c.cfg", "dt = 0.01\ngains.kz = 2\n");
    let out = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr).to_string();
    assert!(err.contains("gains.kz") && err.contains("line 2"), "{err}");

    let out = bin().args(["run", "--config", "/nonexistent/cfg"]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    let out = bin().args(["run", "--scenario", "nowhere"]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    let out = bin()
        .args(["run", "--duration", "0.1", "--out", "/nonexistent/dir/x.csv"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn verify_jacobian_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("dev.csv");
    let out = bin()
        .args(["verify-jacobian", "--samples", "20", "--report"])
        .arg(&report)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(std::fs::read_to_string(&report).unwrap(), "block,state_id,relative_error\n");
}
