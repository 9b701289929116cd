use std::process::Command;

use terrace_lab::scenario::ScenarioReport;
use terrace_lab::verify::{verify_all, VerifyConfig};

fn terrace() -> Command {
    Command::new(env!("CARGO_BIN_EXE_terrace"))
}

#[test]
fn equilibria_writes_ladder_and_profiles() {
    let dir = tempfile::tempdir().unwrap();
    let out = terrace().args(["equilibria", "--nl", "bistable:0.3", "--out"]).arg(dir.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("equilibria.json")).unwrap()).unwrap();
    let rungs = json["ladder"]["rungs"].as_array().unwrap();
    assert_eq!(rungs.len(), 3);
    let means: Vec<f64> = rungs.iter().map(|r| r["mean"].as_f64().unwrap()).collect();
    assert!((means[1] - 0.3).abs() < 1e-8, "{means:?}");
    let csv = std::fs::read_to_string(dir.path().join("equilibria.csv")).unwrap();
    assert!(csv.starts_with("x,q0,q1,q2"));
}

#[test]
fn evolve_then_steepness() {
    let dir = tempfile::tempdir().unwrap();
    let run = |datum: &str, sub: &str| {
        let out = terrace()
            .args(["evolve", "--nl", "bistable:0.25", "--T", "5", "--domain-periods", "20", "--snapshots", "3", "--datum", datum, "--out"])
            .arg(dir.path().join(sub))
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    };
    run("heaviside:0", "a");
    run("heaviside:3", "b");
    let events: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("a/events.json")).unwrap()).unwrap();
    assert_eq!(events["truncated"], false);
    assert_eq!(events["snapshot_files"].as_array().unwrap().len(), 3);
    let out = terrace()
        .arg("steepness")
        .arg(dir.path().join("a"))
        .arg(dir.path().join("b"))
        .arg("--out")
        .arg(dir.path().join("s"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rep: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("s/steepness.json")).unwrap()).unwrap();
    assert_eq!(rep["first_profiles"], 3);
    assert!(rep["intersections"]["count"].as_u64().unwrap() <= 1);
}

#[test]
fn flat_reaction_scenario_reports_continuum() {
    let dir = tempfile::tempdir().unwrap();
    let out = terrace().args(["scenario", "flat-f", "--out"]).arg(dir.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rep: ScenarioReport = serde_json::from_slice(&std::fs::read(dir.path().join("scenario.json")).unwrap()).unwrap();
    assert!(rep.passed);
    assert!(rep.continuum.is_some());
    assert!(rep.terrace.is_none());
}

#[test]
fn unknown_scenario_and_bad_config_fail() {
    let dir = tempfile::tempdir().unwrap();
    let out = terrace().args(["scenario", "nope", "--out"]).arg(dir.path()).output().unwrap();
    assert!(!out.status.success());
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"nonlinearity": {"kind": "kpp"}, "colour": 3}"#).unwrap();
    let out = terrace().args(["classify", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn classify_stacked_reaction() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("p.json");
    std::fs::write(
        &cfg,
        r#"{"nonlinearity": {"kind": "stacked", "intervals": [
            {"lower": 0.0, "upper": 0.5, "shape": "monostable"},
            {"lower": 0.5, "upper": 1.0, "shape": "bistable", "theta": 0.25}]}}"#,
    )
    .unwrap();
    let out = terrace().args(["classify", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rep: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("classify.json")).unwrap()).unwrap();
    let classes: Vec<&str> = rep["segments"].as_array().unwrap().iter().map(|s| s["class"].as_str().unwrap()).collect();
    assert_eq!(classes, ["bistable", "monostable"]);
    assert_eq!(rep["steps"].as_array().unwrap().len(), 3);
}

#[test]
fn lipschitz_violating_time_step_fails_the_suites() {
    let cfg = VerifyConfig {
        fuzz_pairs: 2,
        zero_number_pairs: 1,
        dt_override: Some(2.0),
        scenarios: Some(vec!["bistable".into()]),
        ..VerifyConfig::default()
    };
    let report = verify_all(&cfg, 0);
    assert!(!report.passed);
    let comparison = report.suite("comparison").unwrap();
    assert!(!comparison.passed);
    assert!(comparison.checks.iter().any(|c| c.detail.contains("monotonicity")), "{comparison:?}");
    // the oracle suite does not depend on the time step
    assert!(report.suite("eigen").unwrap().passed);
}
