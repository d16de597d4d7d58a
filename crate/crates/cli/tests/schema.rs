use std::process::Command;

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_fibrecross");
const SCHEMA: &str = include_str!("../../../schema/report.schema.json");

fn envelope(args: &[&str]) -> (i32, Value) {
    let out = Command::new(BIN).args(args).output().expect("binary runs");
    let text = String::from_utf8(out.stdout).expect("UTF-8");
    (out.status.code().unwrap_or(-1), serde_json::from_str(&text).expect("JSON envelope"))
}

fn assert_valid(args: &[&str], expected_code: i32) -> Value {
    let schema: Value = serde_json::from_str(SCHEMA).expect("schema parses");
    let validator = jsonschema::validator_for(&schema).expect("schema compiles");
    let (code, env) = envelope(args);
    assert_eq!(code, expected_code, "{args:?}");
    let errors: Vec<String> = validator.iter_errors(&env).map(|e| format!("{} at {}", e, e.instance_path())).collect();
    assert!(errors.is_empty(), "{args:?}: {errors:#?}");
    env
}

#[test]
fn constants_validates() {
    let env = assert_valid(&["constants"], 0);
    assert!(env["outputs"]["c_star"].as_f64().unwrap().to_string().starts_with("1.5805443269"));
}

#[test]
fn feasible_plan_validates() {
    let env = assert_valid(&["plan", "--g", "10000", "--alpha", "0.2", "--epsilon", "0.5"], 0);
    assert_eq!(env["outputs"]["feasible"], Value::Bool(true));
    assert!(env["outputs"]["side_conditions"]["conditions"].as_array().unwrap().len() >= 11);
}

#[test]
fn infeasible_plan_validates_with_exit_two() {
    let env = assert_valid(&["plan", "--g", "100", "--alpha", "2", "--epsilon", "0.1"], 2);
    assert_eq!(env["outputs"]["feasible"], Value::Bool(false));
    assert!(env["outputs"].get("bound").is_none());
}

#[test]
fn symmetric_mode_records_x() {
    let env = assert_valid(&["plan", "--g", "10000", "--alpha", "0.2", "--mode", "symmetric"], 0);
    assert_eq!(env["inputs"]["x"], Value::from(0.5));
    assert_eq!(env["outputs"]["plan"]["x"], Value::from(0.5));
}

#[test]
fn family_validates() {
    let env = assert_valid(&["family", "--p", "3", "--q", "5", "--k", "3"], 0);
    assert_eq!(env["outputs"]["M"], "20");
    assert_eq!(env["outputs"]["ratio"], Value::from(0.7));
}

#[test]
fn verify_validates() {
    let env = assert_valid(&["verify", "--level", "quick"], 0);
    assert_eq!(env["outputs"]["all_passed"], Value::Bool(true));
}

#[test]
fn tampered_verify_fails() {
    let env = assert_valid(&["verify", "--level", "quick", "--tamper"], 70);
    assert_eq!(env["outputs"]["all_passed"], Value::Bool(false));
}

#[test]
fn sweep_validates() {
    let env = assert_valid(&["sweep", "--alpha", "0.2,0.5", "--g", "1000,10000,100000"], 0);
    assert_eq!(env["outputs"]["rows"].as_array().unwrap().len(), 6);
}

#[test]
fn usage_errors_exit_64() {
    for args in [
        &["plan", "--g", "2", "--alpha", "0.2"][..],
        &["family", "--p", "2", "--q", "4", "--k", "2"],
        &["sweep", "--alpha", "", "--g", "1000"],
        &["nonsense"],
        &["plan", "--g", "100", "--alpha", "x"],
    ] {
        let out = Command::new(BIN).args(args).output().unwrap();
        assert_eq!(out.status.code(), Some(64), "{args:?}");
    }
}

#[test]
fn csv_header_is_frozen() {
    let out = Command::new(BIN)
        .args(["sweep", "--alpha", "0.2", "--g", "1000", "--format", "csv"])
        .output()
        .unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "alpha,g,feasible,q,k,p,leading_constant,symmetric_constant,bjp_upper,bjp_lower"
    );
}

#[test]
fn out_flag_writes_file() {
    let dir = std::env::temp_dir().join(format!("fibrecross-out-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("family.json");
    let status = Command::new(BIN)
        .args(["family", "--p", "2", "--q", "3", "--k", "3", "--out"])
        .arg(&path)
        .status()
        .unwrap();
    assert!(status.success());
    let env: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(env["outputs"]["exact_pair_bound_sum"], "0");
    std::fs::remove_dir_all(dir).unwrap();
}
