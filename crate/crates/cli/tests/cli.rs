use std::process::Command;

fn relaxlab() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_relaxlab"));
    c.env_remove("RELAXLAB_OUT");
    c
}

#[test]
fn sanity_run_and_report_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = relaxlab()
        .args(["--preset", "sanity", "--out"])
        .arg(dir.path())
        .arg("run")
        .output()
        .unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert!(text.contains("PASSED sanity"), "{text}");
    let report = relaxlab().arg("--out").arg(dir.path()).arg("report").output().unwrap();
    assert_eq!(report.status.code(), Some(0));
    let text = String::from_utf8_lossy(&report.stdout);
    assert!(text.lines().last() == Some("PASSED"), "{text}");
}

#[test]
fn invalid_config_exits_two_with_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"grid": {"dx": 0.0}}"#).unwrap();
    let out_dir = dir.path().join("out");
    let out = relaxlab()
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .arg("run")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(doc.to_string().contains("grid.dx"), "{doc}");
    assert!(out_dir.join("error.json").exists());
}

#[test]
fn unknown_preset_is_an_error() {
    let out = relaxlab().args(["--preset", "nope", "validate-material"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn material_check_passes_for_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let out = relaxlab().arg("--out").arg(dir.path()).arg("validate-material").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("material.json")).unwrap()).unwrap();
    assert_eq!(doc["passed"], serde_json::Value::Bool(true));
}
