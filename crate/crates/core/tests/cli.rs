use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn moyal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_moyal"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8")
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).expect("utf-8")
}

fn schema(name: &str) -> jsonschema::Validator {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("schemas").join(format!("{}.schema.json", name));
    let text = std::fs::read_to_string(&path).expect("schema file");
    let value: Value = serde_json::from_str(&text).expect("schema is JSON");
    jsonschema::validator_for(&value).expect("schema compiles")
}

fn assert_valid(schema_name: &str, args: &[&str]) -> Value {
    let out = moyal(args);
    assert_eq!(out.status.code(), Some(0), "{:?}: {}", args, stderr(&out));
    let value: Value = serde_json::from_str(&stdout(&out)).expect("JSON output");
    let v = schema(schema_name);
    let errors: Vec<String> = v.iter_errors(&value).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{:?} against {}: {:?}", args, schema_name, errors);
    value
}

#[test]
fn star_golden_text() {
    let out = moyal(&["star", "p", "q"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "p*q - (1/2)*i*hbar\n");
}

#[test]
fn bracket_and_apply_text() {
    let out = moyal(&["bracket", "--type", "moyal", "q^3", "p^3"]);
    assert_eq!(stdout(&out).trim(), "9*i*p^2*q^2*hbar - (3/2)*i*hbar^3");
    let out = moyal(&["bracket", "--type", "cross", "q", "p"]);
    assert_eq!(stdout(&out).trim(), "(1/2)");
    let out = moyal(&["apply", "--kind", "moyal-norm", "(1/4)*q^4", "p^3"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).trim(), "3*p^2*q^3 - (3/2)*q*hbar^2");
}

#[test]
fn every_json_output_matches_its_schema() {
    for args in [
        &["star", "--format", "json", "p", "q"][..],
        &["bracket", "--format", "json", "--type", "poisson", "q^2*p", "p"],
        &["apply", "--format", "json", "--kind", "classical", "(1/2)*p^2", "q"],
        &["flow", "--format", "json", "--kind", "moyal-raw", "--gen", "(1/2)*p*q", "--param", "(1/3)*i", "--order", "4", "q"],
    ] {
        assert_valid("phasepoly", args);
    }
    let coords = assert_valid(
        "coords",
        &["coords", "--format", "json", "--kind", "moyal-norm", "--gen", "(1/4)*q^4", "--param", "1", "--exact"],
    );
    assert_eq!(coords["Q"]["terms"][0]["q"], 1);
    assert_valid("operator", &["operator", "--format", "json", "(1/2)*p^2 + (1/2)*q^2 + (1/4)*q^4"]);
    let kick = assert_valid(
        "kick-observable",
        &[
            "kick", "--format", "json", "--potential", "(1/4)*q^4", "--lambda", "3", "--T", "2", "--observable", "p^3*q",
            "--defect", "--gauge", "5",
        ],
    );
    assert!(kick.get("defect").is_some());
    for mode in ["exact", "float"] {
        let traj = assert_valid(
            "kick-trajectory",
            &[
                "kick", "--format", "json", "--potential", "(1/2)*q^2", "--lambda", "1", "--T", "1/2", "--q0", "1", "--p0",
                "0", "--steps", "3", "--mode", mode,
            ],
        );
        assert_eq!(traj.as_array().map(Vec::len), Some(4));
    }
    assert_valid(
        "starexp",
        &["starexp", "--format", "json", "--gen", "(1/3)*q^3", "--param", "2/5", "--order", "3", "--conjugate", "p", "--check-mlt"],
    );
    assert_valid("verify-report", &["verify", "starexp", "--format", "json", "--seed", "3"]);
}

#[test]
fn schemas_reject_malformed_documents() {
    let v = schema("phasepoly");
    let missing_im: Value = serde_json::from_str(r#"{"terms":[{"q":1,"p":0,"hbar":0,"re":"1/1"}]}"#).unwrap();
    assert!(!v.is_valid(&missing_im));
    let zero_den: Value = serde_json::from_str(r#"{"terms":[{"q":1,"p":0,"hbar":0,"re":"1/0","im":"0/1"}]}"#).unwrap();
    assert!(!v.is_valid(&zero_den));
    assert!(v.is_valid(&serde_json::json!({"terms": []})));
}

#[test]
fn trajectory_csv() {
    let out = moyal(&[
        "kick", "--format", "csv", "--potential", "(1/2)*q^2", "--lambda", "1", "--T", "1/2", "--q0", "1", "--p0", "0",
        "--steps", "3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "step,q,p\n0,1/1,0/1\n1,1/1,1/1\n2,1/2,3/2\n3,-1/4,5/4\n");
}

#[test]
fn input_file_supplies_trailing_operand() {
    let dir = std::env::temp_dir().join(format!("moyal-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("f.json");
    let out = moyal(&["star", "--format", "json", "p", "q"]);
    std::fs::write(&path, &out.stdout).unwrap();
    let p = path.to_str().unwrap();

    let out = moyal(&["star", "--input", p, "q"]);
    assert_eq!(stdout(&out).trim(), "p*q^2");
    let out = moyal(&["flow", "--kind", "classical", "--gen", "p", "--param", "1", "--exact", "--input", p]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let out = moyal(&["star", "--input", p, "q", "q"]);
    assert_eq!(out.status.code(), Some(1));

    std::fs::write(&path, r#"{"terms":[{"q":1,"p":0,"hbar":0,"re":"1/1"}]}"#).unwrap();
    let out = moyal(&["star", "--input", p, "q"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("im"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn exit_codes() {
    let out = moyal(&["flow", "--kind", "moyal-norm", "--gen", "(1/4)*q^4", "--param", "1", "--exact"]);
    assert_eq!(out.status.code(), Some(1));
    let out = moyal(&["flow", "--kind", "moyal-norm", "--gen", "q^4/4"]);
    assert_eq!(out.status.code(), Some(1));
    let out = moyal(&["star", "q^(-1)", "p"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 1"));
    let out = moyal(&["verify", "nosuch"]);
    assert_eq!(out.status.code(), Some(1));
    let out = moyal(&["flow", "--kind", "classical", "--gen", "q^3*p", "--param", "1", "--exact", "q"]);
    assert_eq!(out.status.code(), Some(1), "non-terminating exact flow");
    let out = moyal(&["verify", "algebra", "--seed", "42"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("algebra.star_associativity [200 cases]"));
}

#[test]
fn kick_verification_reports_printed_formula_counterexample() {
    let out = moyal(&["verify", "kick", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("kick.p3q_defect_printed_formula"));
    assert!(stdout(&out).contains("PASS kick.p3q_defect_closed_form"));
}

#[test]
fn symbolic_budget_warning() {
    let out = moyal(&[
        "kick", "--potential", "(1/3)*q^3", "--lambda", "1", "--T", "1", "--observable", "q", "--steps", "3",
        "--symbolic-budget", "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stderr(&out).contains("warning"));
}

#[test]
fn same_seed_same_report_bytes() {
    let a = moyal(&["verify", "covariance", "--seed", "11", "--format", "json"]);
    let b = moyal(&["verify", "covariance", "--seed", "11", "--format", "json"]);
    assert_eq!(a.stdout, b.stdout);
    let c = moyal(&["verify", "covariance", "--seed", "12", "--format", "json"]);
    assert_ne!(a.stdout, c.stdout);
}
