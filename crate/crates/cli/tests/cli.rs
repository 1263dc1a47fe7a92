use std::fs;
use std::process::Command;

fn tpcool() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tpcool"))
}

#[test]
fn networktest_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = tpcool()
        .args(["networktest", "--k-max", "7", "--output"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("omega = 0.77912"), "{stdout}");
    let table = fs::read_to_string(dir.path().join("network.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 4);
    assert!(dir.path().join("profiles.csv").exists());
}

#[test]
fn layers_dump_both_cases() {
    let dir = tempfile::tempdir().unwrap();
    let out = tpcool()
        .args(["layers2d", "--n", "8", "--output"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    for f in ["boundary.vtk", "boundary.csv", "interior.vtk", "interior.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn convergence_rejects_unknown_stabilization() {
    let out = tpcool()
        .args(["convergence2d", "--stabilization", "central", "--ns", "4"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_or_invalid_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "schema_version = 1\nunknown_key = 3\n").unwrap();
    let out = tpcool().args(["run", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = tpcool().args(["run", "--preset", "deviceA", "--theta", "0"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = tpcool().arg("run").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unconverged_run_exits_3_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = tpcool()
        .args(["run", "--preset", "deviceA", "--outer-max-iter", "1", "--output"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let report = fs::read_to_string(dir.path().join("report.toml")).unwrap();
    assert!(report.contains("converged = false"));
    for f in ["fields.vtk", "fields.csv", "profiles.csv", "history.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn sweep_runs_into_separate_directories() {
    let dir = tempfile::tempdir().unwrap();
    let out = tpcool()
        .args(["sweep", "--preset", "deviceA", "--g-tot", "5,6", "--output"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for g in ["g_tot_5", "g_tot_6"] {
        assert!(dir.path().join(g).join("report.toml").exists());
    }
    let table = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 3);
}
