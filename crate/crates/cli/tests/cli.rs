use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn scenario() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/scenarios/earth_observation.json")
}

fn voform(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_voform"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_writes_a_six_step_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("out.trace");
    let out = voform(&["run", s(&scenario()), "--trace", s(&trace)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&trace).unwrap()).unwrap();
    let steps = doc["trace"]["steps"].as_array().unwrap();
    assert_eq!(steps.len(), 6);
    assert_eq!(steps[5]["after"]["stage"], "contracts_agreed");
    assert!(doc["trace"].get("failure").is_none());
}

#[test]
fn trace_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.trace");
    let b = dir.path().join("b.trace");
    assert_eq!(
        code(&voform(&["run", s(&scenario()), "--trace", s(&a), "--seed", "9"])),
        0
    );
    assert_eq!(
        code(&voform(&["run", s(&scenario()), "--trace", s(&b), "--seed", "9"])),
        0
    );
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn step_limit_below_protocol_length_fails_formation() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("short.trace");
    let out = voform(&["run", s(&scenario()), "--trace", s(&trace), "--max-dialogue-steps", "1"]);
    assert_eq!(code(&out), 2);
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&trace).unwrap()).unwrap();
    assert_eq!(doc["trace"]["failure"]["transition"], "agree_workflow");
    assert_eq!(code(&voform(&["check", s(&trace)])), 0);
}

#[test]
fn validate_accepts_bundled_and_itemizes_broken() {
    let out = voform(&["validate", s(&scenario())]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("5 agents, 4 services"));

    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(scenario()).unwrap()).unwrap();
    let dup = doc["agents"][1].clone();
    doc["agents"].as_array_mut().unwrap().push(dup);
    doc["formation"]["initiator"] = "nobody".into();
    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.scenario");
    std::fs::write(&broken, serde_json::to_string_pretty(&doc).unwrap()).unwrap();
    let out = voform(&["validate", s(&broken)]);
    assert_eq!(code(&out), 1);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("agents[1].id"), "{err}");
    assert!(err.contains("formation.initiator"), "{err}");
}

#[test]
fn syntax_error_and_missing_file_are_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.scenario");
    std::fs::write(&bad, "{\n  \"name\": \"x\",\n  oops\n}").unwrap();
    let out = voform(&["validate", s(&bad)]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
    assert_eq!(code(&voform(&["run", s(&dir.path().join("missing"))])), 1);
    assert_eq!(code(&voform(&["check", s(&dir.path().join("missing"))])), 1);
}

#[test]
fn check_detects_a_goal_edited_out() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("out.trace");
    assert_eq!(code(&voform(&["run", s(&scenario()), "--trace", s(&trace)])), 0);
    assert_eq!(code(&voform(&["check", s(&trace)])), 0);

    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(&trace).unwrap()).unwrap();
    doc["trace"]["steps"][5]["after"]["goals"]
        .as_array_mut()
        .unwrap()
        .remove(0);
    let tampered = dir.path().join("tampered.trace");
    std::fs::write(&tampered, serde_json::to_string_pretty(&doc).unwrap()).unwrap();
    let out = voform(&["check", s(&tampered)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAILED"));
}
