use std::path::PathBuf;
use std::process::{Command, Output};

fn corpus(name: &str) -> String {
    let mut p = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    p.pop();
    p.pop();
    p.push("corpus");
    p.push(name);
    p.to_str().unwrap().to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pbcplus"))
        .args(args)
        .env_remove("PBC_MAX_INTERP")
        .env_remove("PBC_MAX_STATES")
        .output()
        .expect("spawn pbcplus")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn query_json_probability() {
    let out = run(&[
        "query",
        "-i",
        &corpus("psd.pbc"),
        "-q",
        &corpus("path024.pq"),
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).expect("valid json");
    let p = v["probability"].as_f64().unwrap();
    assert!((p - 0.024).abs() < 1e-9);
    assert!(v["masses"].is_array());
}

#[test]
fn query_text_prints_nine_decimals() {
    let out = run(&["query", "-i", &corpus("psd.pbc"), "-q", &corpus("path024.pq")]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "probability: 0.024000000\n");
}

#[test]
fn ts_reports_states_edges_and_writes_dot() {
    let dot = std::env::temp_dir().join("pbcplus_cli_test_psd.dot");
    let out = run(&[
        "ts",
        "-i",
        &corpus("psd.pbc"),
        "--dot",
        dot.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["states"].as_array().unwrap().len(), 2);
    assert_eq!(v["edges"].as_array().unwrap().len(), 6);
    let text = std::fs::read_to_string(&dot).unwrap();
    assert!(text.starts_with("digraph"));
    assert_eq!(text.matches("->").count(), 6);
    std::fs::remove_file(&dot).ok();
}

#[test]
fn check_passes_on_yale() {
    let out = run(&["check", "-i", &corpus("yale.pbc"), "-m", "2"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("no concurrency: holds"));
    assert!(text.contains("stationarity over 2 steps: holds"));
}

#[test]
fn plan_map_recovers_expected_sequence() {
    let out = run(&[
        "query",
        "-i",
        &corpus("yale.pbc"),
        "-q",
        &corpus("plan.pq"),
        "--map",
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let plan: Vec<Vec<String>> = serde_json::from_value(v["plan"].clone()).unwrap();
    assert_eq!(
        plan,
        vec![
            vec!["load".to_string()],
            vec!["fire(slimTurkey)".to_string()],
            vec!["load".to_string()],
            vec!["fire(fatTurkey)".to_string()],
        ]
    );
    assert_eq!(v["engine"], "plan-map");
}

#[test]
fn empty_description_parses_cleanly() {
    let path = std::env::temp_dir().join("pbcplus_cli_test_empty.pbc");
    std::fs::write(&path, "").unwrap();
    let out = run(&["parse", "-i", path.to_str().unwrap()]);
    assert!(out.status.success());
    std::fs::remove_file(&path).ok();
}

#[test]
fn missing_file_is_a_user_error() {
    let out = run(&["parse", "-i", "/no/such/file.pbc"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn parse_error_carries_position() {
    let path = std::env::temp_dir().join("pbcplus_cli_test_bad.pbc");
    std::fs::write(&path, "fluent p\ncaused q.\n").unwrap();
    let out = run(&["parse", "-i", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr).to_string();
    assert!(err.contains("2:"), "no position in: {err}");
    std::fs::remove_file(&path).ok();
}

#[test]
fn interp_cap_env_triggers_capacity_exit() {
    let out = Command::new(env!("CARGO_BIN_EXE_pbcplus"))
        .args(["query", "-i", &corpus("psd.pbc"), "-q", &corpus("path024.pq")])
        .env("PBC_MAX_INTERP", "4")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn state_cap_env_triggers_capacity_exit() {
    let out = Command::new(env!("CARGO_BIN_EXE_pbcplus"))
        .args(["ts", "-i", &corpus("yale.pbc")])
        .env("PBC_MAX_STATES", "1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn identical_runs_are_byte_identical() {
    let args = [
        "query",
        "-i",
        &corpus("yale.pbc"),
        "-q",
        &corpus("pred.pq"),
        "--format",
        "json",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn translate_explain_annotates_rules() {
    let out = run(&["translate", "-i", &corpus("psd.pbc"), "-m", "1", "--explain"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("% law"));
    assert!(text.contains("% initial fluent choice"));
    assert!(text.contains("% action choice"));
}
