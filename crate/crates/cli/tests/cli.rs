use std::process::Command;

use lpdiscrim::catalog;
use lpdiscrim::engine::evaluate;
use lpdiscrim::protocol::groisman_protocol;
use lpdiscrim::ResourceSpec;
use lpdiscrim_cli::{run, run_case, CaseId, CaseParams, EXIT_CLAIM_FAILED, EXIT_OK, EXIT_USAGE};
use serde_json::Value;

fn repro(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("repro").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json(args: &[&str]) -> (i32, Value) {
    let (code, out, err) = repro(args);
    assert!(err.is_empty(), "{err}");
    (code, serde_json::from_str(&out).unwrap())
}

fn close(v: &Value, expected: f64, tol: f64) -> bool {
    (v.as_f64().unwrap() - expected).abs() <= tol
}

#[test]
fn eq3_row() {
    let (code, doc) = json(&["eq3", "--a2", "0.8"]);
    assert_eq!(code, EXIT_OK);
    let case = &doc["cases"][0];
    assert_eq!(case["row"]["case"], "eq3");
    assert!(close(&case["row"]["paper_value"], 0.95, 1e-12));
    assert!(close(&case["row"]["computed"], 0.95, 1e-12));
    assert!(close(&case["details"]["ab"], 0.4, 1e-12));
    assert_eq!(case["details"]["match"], true);
    assert_eq!(doc["all_pass"], true);
}

#[test]
fn eq5_at_right_angles() {
    let (code, doc) = json(&["--case", "eq5", "--alpha", "1.5707963", "--alphaprime", "1.5707963"]);
    assert_eq!(code, EXIT_OK);
    let d = &doc["cases"][0]["details"];
    assert!(close(&d["p_formula"], 1.0, 1e-12));
    assert!(close(&d["p_engine"], 1.0, 1e-12));
}

#[test]
fn eq1_lp_coarse_grid() {
    let (code, doc) = json(&["eq1-lp", "--resolution", "0.01"]);
    assert_eq!(code, EXIT_OK);
    let target = 0.5 + 0.5 / 2f64.sqrt();
    assert!(close(&doc["cases"][0]["row"]["computed"], target, 1e-3));
}

#[test]
fn csv_header_and_row() {
    let (code, out, _) = repro(&["eq3", "--ab", "0.3", "--format", "csv"]);
    assert_eq!(code, EXIT_OK);
    let mut lines = out.lines();
    assert_eq!(lines.next().unwrap(), "case,claim,paper_value,computed,tolerance,pass,seconds");
    let row = lines.next().unwrap();
    let fields: Vec<&str> = row.split(',').collect();
    assert_eq!(fields.len(), 7);
    assert_eq!(fields[0], "eq3");
    assert_eq!(fields[2], "0.9");
    assert!((fields[3].parse::<f64>().unwrap() - 0.9).abs() < 1e-12);
    assert_eq!(fields[5], "true");
    assert!(lines.next().is_none());
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(repro(&["eq42"]).0, EXIT_USAGE);
    assert_eq!(repro(&[]).0, EXIT_USAGE);
    assert_eq!(repro(&["eq3", "--format", "xml"]).0, EXIT_USAGE);
    assert_eq!(repro(&["eq3", "--a2", "0.3"]).0, EXIT_USAGE);
    assert_eq!(repro(&["ictp", "--triple", "1,2,9"]).0, EXIT_USAGE);
    let (code, out, _) = repro(&["--help"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("--resolution"));
}

#[test]
fn malformed_basis_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("basis.json");
    std::fs::write(&path, r#"{"dims":[2,2],"ownership":["A","B"],"states":[[1,1,0,0]]}"#).unwrap();
    let (code, _, err) = repro(&["thm5", "--basis", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("normalized"), "{err}");
}

#[test]
fn basis_file_and_out_path() {
    let dir = tempfile::tempdir().unwrap();
    let basis = dir.path().join("eq1.json");
    std::fs::write(&basis, catalog::eq1().unwrap().to_json().unwrap()).unwrap();
    let out = dir.path().join("report.json");
    let (code, stdout, _) = repro(&["thm5", "--basis", basis.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    assert!(stdout.is_empty());
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(doc["cases"][0]["details"]["copies"], 2);
    assert_eq!(doc["cases"][0]["details"]["copy_bound"], 2);
}

#[test]
fn failed_claim_exits_two() {
    let (code, doc) = json(&["thm5", "--copies", "1"]);
    assert_eq!(code, EXIT_CLAIM_FAILED);
    assert_eq!(doc["cases"][0]["row"]["pass"], false);
    assert!(doc["cases"][0]["details"]["error"].as_str().unwrap().contains("copies"));
}

#[test]
fn ictp_and_bell_cases() {
    let (code, doc) = json(&["ictp", "--a2", "0.65", "--c2", "0.75", "--triple", "2,3,4"]);
    assert_eq!(code, EXIT_OK);
    assert!(close(&doc["cases"][0]["row"]["computed"], 1.0, 1e-9));
    let (code, doc) = json(&["bell4", "--ab", "0.3"]);
    assert_eq!(code, EXIT_OK);
    assert!(close(&doc["cases"][0]["row"]["computed"], 0.8, 1e-12));
    assert!(doc["cases"][0]["details"]["probe_max"].as_f64().unwrap() <= 0.8 + 1e-9);
}

#[test]
fn strict_family_constraints_and_lenient_override() {
    // c = a violates the distinctness constraint of the one-cbit family.
    assert_eq!(repro(&["ictp", "--a2", "0.8", "--c2", "0.8"]).0, EXIT_USAGE);
    let (code, _) = json(&["ictp", "--a2", "0.8", "--c2", "0.8", "--lenient", "--triple", "1,2,3,4"]);
    assert_eq!(code, EXIT_OK);
}

#[test]
fn cases_are_thin_delegates() {
    let params = CaseParams {
        a2: Some(0.7),
        ..CaseParams::default()
    };
    let row = run_case(CaseId::Eq3, &params).unwrap().row;
    let direct = evaluate(
        &catalog::eq1().unwrap(),
        &groisman_protocol(ResourceSpec::from_square(0.7).unwrap()).unwrap(),
    )
    .unwrap()
    .success_probability();
    assert_eq!(row.computed.to_bits(), direct.to_bits());
}

#[test]
fn reports_are_deterministic_apart_from_timing() {
    let strip = |mut v: Value| {
        v.as_object_mut().unwrap().remove("metadata");
        for c in v["cases"].as_array_mut().unwrap() {
            c["row"].as_object_mut().unwrap().remove("seconds");
        }
        v
    };
    let args = ["thm2", "--alpha", "0.7", "--resolution", "0.02", "--seed", "5"];
    let (_, a) = json(&args);
    let (_, b) = json(&args);
    assert_eq!(strip(a), strip(b));
}

#[test]
fn claim_matrix_has_one_row_per_case() {
    let out = Command::new(env!("CARGO_BIN_EXE_repro"))
        .args(["all", "--format", "csv"])
        .env("LPDISCRIM_BUDGET_SECS", "0.2")
        .output()
        .unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 10);
    let ids: Vec<&str> = rows.iter().map(|r| r.split(',').next().unwrap()).collect();
    assert_eq!(
        ids,
        ["eq1-lp", "eq3", "eq5", "thm2", "bell3", "bell4", "thm4", "ictp", "thm5", "eq9-search"]
    );
    let code = out.status.code().unwrap();
    assert!(code == EXIT_OK || code == EXIT_CLAIM_FAILED);
}
