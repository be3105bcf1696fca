use relaxlab::config::{RunConfig, Scenario};
use relaxlab::pipeline::run_scenario;
use relaxlab::LabError;

#[test]
fn sanity_scenario_passes_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::preset(Scenario::Sanity);
    let r = run_scenario(&cfg, dir.path()).unwrap();
    assert!(r.passed, "{:#?}", r.verdicts);
    for name in ["config.json", "diagnostics.csv", "metadata.json", "verdicts.json"] {
        assert!(dir.path().join(name).exists(), "missing {name}");
    }
    assert!(!dir.path().join("error.json").exists());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let cfg = RunConfig::preset(Scenario::Sanity);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_scenario(&cfg, a.path()).unwrap();
    run_scenario(&cfg, b.path()).unwrap();
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("diagnostics.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn overlay_errors_name_the_offending_field() {
    let err = RunConfig::from_json_str(r#"{"grid": {"dx": -0.1}}"#).unwrap_err();
    assert!(err.to_string().contains("grid.dx"), "{err}");
    let err = RunConfig::from_json_str(r#"{"grid": {"dxx": 0.1}}"#).unwrap_err();
    assert!(err.to_string().contains("grid"), "{err}");
    let err = RunConfig::from_json_str(r#"{"material": {"young": 10.0}}"#).unwrap_err();
    assert!(err.to_string().contains("material.young"), "{err}");
    assert!(matches!(
        RunConfig::from_json_str(r#"{"scenario": "nonsense"}"#),
        Err(LabError::Config { .. }) | Err(LabError::InvalidArgument(_))
    ));
}

#[test]
fn presets_round_trip_through_json() {
    for s in Scenario::ALL {
        let cfg = RunConfig::preset(s);
        cfg.validate().unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        let back = RunConfig::from_json_str(&text).unwrap();
        assert_eq!(serde_json::to_value(&back).unwrap(), serde_json::to_value(&cfg).unwrap());
    }
}
