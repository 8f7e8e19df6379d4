//! End-to-end checks of the binary: golden outputs, exit codes, and
//! byte-for-byte determinism.

use std::path::PathBuf;
use std::process::Command;

fn model_path(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../models")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn run(args: &[&str]) -> (String, String, i32) {
    run_with_env(args, &[])
}

fn run_with_env(args: &[&str], envs: &[(&str, &str)]) -> (String, String, i32) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_structdiag"));
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("binary runs");
    (
        String::from_utf8(out.stdout).expect("stdout is utf-8"),
        String::from_utf8(out.stderr).expect("stderr is utf-8"),
        out.status.code().unwrap_or(-1),
    )
}

#[test]
fn irg_table_matches_the_low_index_analysis() {
    let (stdout, _, code) = run(&["irg", &model_path("eq4.json"), "--operator", "lowindex"]);
    assert_eq!(code, 0);
    let expected = "\
IRG set           fault signature
{e4,e5,e6}        {f2,f3}
{e1,e2,e3,e6}     {f1}
{e1,e2,e3,e4,e6}  {f1,f2}
{e1,e2,e3,e5,e6}  {f1,f3}
";
    assert_eq!(stdout, expected);
}

#[test]
fn mtes_table_lists_the_three_minimal_supports() {
    let (stdout, _, code) = run(&["mtes", &model_path("eq4.json")]);
    assert_eq!(code, 0);
    let expected = "\
MTES           test support
{e1,e2,e3,e6}  {f1}
{e1,e3,e4,e6}  {f2}
{e1,e3,e5,e6}  {f3}
";
    assert_eq!(stdout, expected);
}

#[test]
fn rg_json_contains_the_two_records() {
    let (stdout, _, code) = run(&[
        "rg",
        &model_path("eq2.json"),
        "--operator",
        "backsub",
        "--format",
        "json",
    ]);
    assert_eq!(code, 0);
    let records: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    let records = records.as_array().unwrap();
    assert_eq!(records.len(), 2);
    assert_eq!(
        records[0]["set"],
        serde_json::json!(["e1", "e2", "e3", "e5"])
    );
    assert_eq!(records[0]["signature"], serde_json::json!(["f2"]));
    assert_eq!(records[0]["redundancy"], 2);
    assert_eq!(
        records[1]["set"],
        serde_json::json!(["e1", "e2", "e3", "e4", "e5"])
    );
    assert_eq!(records[1]["signature"], serde_json::json!(["f1", "f2"]));
    assert_eq!(records[1]["redundancy"], 3);
}

#[test]
fn dm_table_shows_parts_and_permuted_grid() {
    let (stdout, _, code) = run(&["dm", &model_path("eq4.json")]);
    assert_eq!(code, 0);
    let expected = "\
part  equations            unknowns
M-    {}                   {}
M0    {}                   {}
M+    {e1,e2,e3,e4,e5,e6}  {x1,x2,x3}

    x1  x2  x3
e1   X   X
e2   X   X   X
e3       X   X
e4   X
e5           X
e6   X       X
";
    assert_eq!(stdout, expected);
}

#[test]
fn mso_csv_has_ten_rows() {
    let (stdout, _, code) = run(&["mso", &model_path("eq2.json"), "--format", "csv"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], "set,signature");
    assert_eq!(lines.len(), 11);
    assert!(lines.contains(&"\"e1,e2,e5\",f2"));
    assert!(lines.contains(&"\"e1,e2,e3\","));
}

#[test]
fn detect_lists_both_faults() {
    let (stdout, _, code) = run(&[
        "detect",
        &model_path("eq2.json"),
        "--operator",
        "backsub",
    ]);
    assert_eq!(code, 0);
    assert_eq!(stdout, "detectable fault\nf1\nf2\n");
}

#[test]
fn isolate_pair_verdicts_are_asymmetric() {
    let (stdout, _, code) = run(&[
        "isolate",
        &model_path("eq2.json"),
        "--operator",
        "backsub",
        "--from",
        "f2",
        "--wrt",
        "f1",
    ]);
    assert_eq!(code, 0);
    assert_eq!(
        stdout,
        "from  wrt   isolable  witness\n{f2}  {f1}  true      e5\n"
    );

    let (stdout, _, code) = run(&[
        "isolate",
        &model_path("eq2.json"),
        "--operator",
        "backsub",
        "--from",
        "f1",
        "--wrt",
        "f2",
        "--format",
        "json",
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["isolable"], serde_json::json!(false));
    assert_eq!(v["witness"], serde_json::Value::Null);
}

#[test]
fn isolate_matrix_covers_all_ordered_pairs() {
    let (stdout, _, code) = run(&[
        "isolate",
        &model_path("eq4.json"),
        "--operator",
        "lowindex",
    ]);
    assert_eq!(code, 0);
    let expected = "\
from\\wrt  f1  f2  f3
f1        -   X   X
f2        X   -   X
f3        X   X   -
";
    assert_eq!(stdout, expected);
}

#[test]
fn residual_fusion_reports_weights_and_variance() {
    let (stdout, _, code) = run(&[
        "residual",
        &model_path("eq2.json"),
        "--set",
        "e1,e2,e5",
        "--set",
        "e1,e3,e5",
        "--fuse",
        "f2",
    ]);
    assert_eq!(code, 0);
    let expected = "\
set         residual  value          sensitivity        variance
{e1,e2,e5}  e1        -u1 + u2 + y3  f2 + v1 - v2 + v5  3
{e1,e3,e5}  e1        u1 - y1 + y3   f2 - v1 - v3 + v5  3

fusion target: f2
weights: [0.5, 0.5]
variance: 1.5
residual covariance: [[3, 0], [0, 3]]
fused value: 1/2*u2 - 1/2*y1 + y3
fused sensitivity: f2 - 1/2*v2 - 1/2*v3 + v5
";
    assert_eq!(stdout, expected);
}

#[test]
fn oracle_check_passes_on_both_models() {
    for model in ["eq2.json", "eq4.json"] {
        let (stdout, _, code) = run(&["oracle-check", &model_path(model)]);
        assert_eq!(code, 0, "oracle-check failed on {model}:\n{stdout}");
        assert!(stdout.ends_with("all checks passed\n"));
        assert!(!stdout.contains("MISMATCH"));
    }
}

#[test]
fn output_is_deterministic_across_runs() {
    let args = ["irg", &model_path("eq4.json"), "--operator", "lowindex"];
    let first = run(&args);
    let second = run(&args);
    assert_eq!(first, second);
}

#[test]
fn unreadable_or_invalid_input_exits_two() {
    let (_, stderr, code) = run(&["dm", "/nonexistent/model.json"]);
    assert_eq!(code, 2);
    assert!(stderr.contains("cannot read"));

    let bad = std::env::temp_dir().join(format!("structdiag-bad-{}.json", std::process::id()));
    std::fs::write(&bad, "{ not json").unwrap();
    let (_, stderr, code) = run(&["dm", &bad.to_string_lossy()]);
    assert_eq!(code, 2);
    assert!(stderr.contains("syntax error"));
    std::fs::remove_file(&bad).ok();

    // Structurally invalid: fault placed in two equations.
    let dup = std::env::temp_dir().join(format!("structdiag-dup-{}.json", std::process::id()));
    std::fs::write(
        &dup,
        r#"{"name":"m","unknowns":["x"],"faults":["g"],"equations":[
            {"id":"e1","unknowns":[{"var":"x"}],"faults":["g"]},
            {"id":"e2","unknowns":[{"var":"x"}],"faults":["g"]}]}"#,
    )
    .unwrap();
    let (_, stderr, code) = run(&["dm", &dup.to_string_lossy()]);
    assert_eq!(code, 2);
    assert!(stderr.contains("multiple equations"));
    std::fs::remove_file(&dup).ok();

    // Missing linear block for residual derivation.
    let (_, stderr, code) = run(&["residual", &model_path("eq4.json")]);
    assert_eq!(code, 2);
    assert!(stderr.contains("linear block"));
}

#[test]
fn analysis_precondition_failures_exit_one() {
    // Unknown fault id in a mode.
    let (_, stderr, code) = run(&[
        "isolate",
        &model_path("eq2.json"),
        "--from",
        "nope",
        "--wrt",
        "f1",
    ]);
    assert_eq!(code, 1);
    assert!(stderr.contains("unknown fault"));

    // A set that cannot be computed by back-substitution.
    let (_, stderr, code) = run(&[
        "residual",
        &model_path("eq2.json"),
        "--set",
        "e1,e2,e3,e4",
    ]);
    assert_eq!(code, 1);
    assert!(stderr.contains("back-substitution"));

    // Unknown operator name.
    let (_, stderr, code) = run(&["rg", &model_path("eq2.json"), "--operator", "nope"]);
    assert_eq!(code, 1);
    assert!(stderr.contains("unknown operator"));
}

#[test]
fn oracle_bound_env_override_is_honored() {
    let (_, stderr, code) = run_with_env(
        &["oracle-check", &model_path("eq2.json")],
        &[("STRUCTDIAG_ORACLE_BOUND", "3")],
    );
    assert_eq!(code, 1);
    assert!(stderr.contains("exceeds the oracle bound"));
}
