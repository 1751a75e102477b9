//! End-to-end checks of the binary: exit codes, output schemas, and
//! byte-level determinism of seeded runs.

use std::path::Path;
use std::process::{Command, Output};

fn varopkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_varopkit"))
        .args(args)
        .env("VAROPKIT_THREADS", "2")
        .output()
        .expect("binary should launch")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout should be utf-8")
}

fn write_fn(dir: &Path, name: &str, json: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, json).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn group_summary_lists_the_irreducible_dimensions() {
    let out = varopkit(&["group", "--type", "symmetric", "--n", "3", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(v["order"], 6);
    assert_eq!(v["irrep_dims"], serde_json::json!([1, 1, 2]));
    assert_eq!(v["sum_of_squares"], 6);
    assert_eq!(v["complete"], true);
}

#[test]
fn group_families_require_their_size_argument() {
    let out = varopkit(&["group", "--type", "cyclic"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn unknown_descriptors_exit_with_input_error() {
    let out = varopkit(&["group", "--type", "sporadic", "--n", "5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fourier_norm_of_a_point_mass_closes_with_default_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_fn(
        dir.path(),
        "delta.json",
        r#"{"group":{"type":"cyclic","n":3},"arity":1,"values":[[1.0,0.0],[0.0,0.0],[0.0,0.0]]}"#,
    );
    let out = varopkit(&["norm", "--target", "fourier", "--input", &input, "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    let lower = v["lower"].as_f64().unwrap();
    let upper = v["upper"].as_f64().unwrap();
    assert!(lower <= 1.0 + 1e-9 && 1.0 <= upper + 1e-9);
    assert!(upper - lower <= 1e-6);
    assert!(v["witness"]["f"].is_array());
    assert!(v["method"].is_string());
}

#[test]
fn schur_target_rejects_inputs_that_are_not_kernels() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_fn(
        dir.path(),
        "vector.json",
        r#"{"group":{"type":"cyclic","n":2},"arity":1,"values":[[1.0,0.0],[0.5,0.0]]}"#,
    );
    let out = varopkit(&["norm", "--target", "schur", "--input", &input]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_input_files_exit_with_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad_json = write_fn(dir.path(), "broken.json", "{not json");
    let out = varopkit(&["norm", "--target", "fourier", "--input", &bad_json]);
    assert_eq!(out.status.code(), Some(2));

    let short = write_fn(
        dir.path(),
        "short.json",
        r#"{"group":{"type":"cyclic","n":3},"arity":1,"values":[[1.0,0.0]]}"#,
    );
    let out = varopkit(&["norm", "--target", "fourier", "--input", &short]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn capped_bond_dimension_surfaces_as_a_flagged_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_fn(
        dir.path(),
        "rough.json",
        r#"{"group":{"type":"cyclic","n":2},"arity":3,"values":[[0.9,0.1],[-0.3,0.7],[0.2,-0.8],[0.5,0.4],[-0.6,0.2],[0.1,-0.5],[0.8,0.3],[-0.4,-0.9]]}"#,
    );
    let out = varopkit(&[
        "norm", "--target", "haagerup", "--input", &input, "--bond-cap", "1", "--tol",
        "1e-9", "--format", "json",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let v: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert!(v["flag"].is_string());
}

#[test]
fn seeded_check_reports_are_byte_identical_across_runs() {
    let args = [
        "check", "--suite", "all", "--group", "c2", "--n", "1", "--seed", "7", "--format",
        "json",
    ];
    let first = varopkit(&args);
    let second = varopkit(&args);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout);
    let v: serde_json::Value = serde_json::from_str(&stdout_of(&first)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 4);
    for suite in v.as_array().unwrap() {
        assert_eq!(suite["passed"], true);
    }
}

#[test]
fn named_suites_run_alone_and_unknown_names_are_rejected() {
    let out = varopkit(&["check", "--suite", "lemma51", "--group", "s3", "--n", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout_of(&out).contains("PASS"));

    let out = varopkit(&["check", "--suite", "nonsense", "--group", "c2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reports_land_in_the_requested_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("report.csv");
    let out = varopkit(&[
        "check", "--suite", "ditkin", "--group", "c2", "--n", "1", "--format", "csv",
        "--out", target.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout_of(&out).is_empty());
    let written = std::fs::read_to_string(&target).unwrap();
    assert!(written.starts_with("suite,group,arity,seed,check,pass,deviation,bound,detail"));
}

#[test]
fn nonpositive_tolerances_are_rejected_before_any_work() {
    let out = varopkit(&[
        "norm", "--target", "fourier", "--input", "missing.json", "--tol", "0",
    ]);
    assert_eq!(out.status.code(), Some(2));
}
