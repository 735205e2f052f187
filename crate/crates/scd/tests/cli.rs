//! End-to-end contract tests for the `scd` binary: exit codes, stream
//! separation, and the exact output shapes of each command.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn corpus(rel: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus")
        .join(rel)
        .to_string_lossy()
        .to_string()
}

fn scd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scd"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("stdout is UTF-8")
}

fn stderr_of(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).expect("stderr is UTF-8")
}

fn status_of(output: &Output) -> i32 {
    output.status.code().expect("no signal exit")
}

// ===== check =====

#[test]
fn check_clean_model_is_silent_and_exits_zero() {
    let output = scd(&["check", &corpus("healthcare/root.scd")]);
    assert_eq!(status_of(&output), 0);
    assert!(stdout_of(&output).is_empty());
    assert!(stderr_of(&output).is_empty());
}

#[test]
fn check_broken_model_prints_one_error_line_and_exits_one() {
    let output = scd(&["check", &corpus("coronavirus-broken/root.scd")]);
    assert_eq!(status_of(&output), 1);
    assert!(stdout_of(&output).is_empty(), "diagnostics must not go to stdout");
    let stderr = stderr_of(&output);
    let lines: Vec<&str> = stderr.lines().collect();
    assert_eq!(lines.len(), 1, "{stderr}");
    assert!(lines[0].contains("error[E-MAP-001]"), "{stderr}");
}

#[test]
fn check_missing_file_is_a_usage_failure() {
    let output = scd(&["check", "no-such-file.scd"]);
    assert_eq!(status_of(&output), 2);
    assert!(stderr_of(&output).contains("cannot read"));
}

#[test]
fn check_many_files_reports_each_and_takes_the_worst_status() {
    let clean = corpus("healthcare/root.scd");
    let broken = corpus("coronavirus-broken/root.scd");
    let output = scd(&["check", &clean, &broken]);
    assert_eq!(status_of(&output), 1);
    assert!(stderr_of(&output).contains("E-MAP-001"));

    let output = scd(&["check", &broken, "no-such-file.scd"]);
    assert_eq!(status_of(&output), 2, "usage failure dominates diagnostics");
    assert!(stderr_of(&output).contains("E-MAP-001"), "earlier file still reported");
}

#[test]
fn deny_warnings_promotes_warning_only_models() {
    let dir = tempfile::tempdir().expect("tempdir");
    let file = dir.path().join("warn.scd");
    // A concrete system that names no mechanism draws a warning but no error.
    fs::write(&file, "scd m {\n  concrete system S {\n    composition {\n      a;\n    }\n  }\n}\n")
        .expect("write");
    let path = file.to_string_lossy().to_string();

    let plain = scd(&["check", &path]);
    assert_eq!(status_of(&plain), 0);
    assert!(stderr_of(&plain).contains("warning[W-CSM-002]"));

    let denied = scd(&["check", "--deny-warnings", &path]);
    assert_eq!(status_of(&denied), 1);
}

#[test]
fn json_diagnostics_are_one_parseable_object_per_line() {
    let output = scd(&["check", "--json-diagnostics", &corpus("coronavirus-broken/root.scd")]);
    assert_eq!(status_of(&output), 1);
    let stderr = stderr_of(&output);
    assert!(!stderr.is_empty());
    for line in stderr.lines() {
        let value: serde_json::Value = serde_json::from_str(line).expect("line parses as JSON");
        let object = value.as_object().expect("object");
        for key in ["file", "line", "col", "severity", "code", "message"] {
            assert!(object.contains_key(key), "missing {key} in {line}");
        }
        assert_eq!(object["code"], "E-MAP-001");
        assert!(object["line"].is_u64());
    }
}

// ===== fmt =====

fn temp_copy(dir: &tempfile::TempDir, name: &str, content: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, content).expect("write temp file");
    path
}

#[test]
fn fmt_check_accepts_canonical_and_rejects_messy_without_writing() {
    let canonical = scd(&["fmt", "--check", &corpus("cell/root.scd")]);
    assert_eq!(status_of(&canonical), 0);

    let dir = tempfile::tempdir().expect("tempdir");
    let messy = temp_copy(&dir, "messy.scd", "scd m{concrete system S{composition{a;}}}");
    let before = fs::read_to_string(&messy).expect("read");
    let output = scd(&["fmt", "--check", &messy.to_string_lossy()]);
    assert_eq!(status_of(&output), 1);
    assert!(stderr_of(&output).contains("not in canonical form"));
    assert_eq!(fs::read_to_string(&messy).expect("read"), before, "--check must not write");
}

#[test]
fn fmt_rewrites_to_canonical_form_once() {
    let dir = tempfile::tempdir().expect("tempdir");
    let messy = temp_copy(&dir, "messy.scd", "scd m{concrete system S{composition{a;}}}");
    let path = messy.to_string_lossy().to_string();

    assert_eq!(status_of(&scd(&["fmt", &path])), 0);
    let formatted = fs::read_to_string(&messy).expect("read");
    assert!(formatted.starts_with("scd m {\n"), "{formatted}");

    assert_eq!(status_of(&scd(&["fmt", "--check", &path])), 0, "now canonical");
    assert_eq!(status_of(&scd(&["fmt", &path])), 0);
    assert_eq!(fs::read_to_string(&messy).expect("read"), formatted, "idempotent");
}

#[test]
fn fmt_refuses_ill_formed_input() {
    let dir = tempfile::tempdir().expect("tempdir");
    let broken = temp_copy(&dir, "broken.scd", "scd m {\n  concrete system {\n");
    let before = fs::read_to_string(&broken).expect("read");
    let output = scd(&["fmt", &broken.to_string_lossy()]);
    assert_eq!(status_of(&output), 2);
    assert!(stderr_of(&output).contains("E-PAR"), "{}", stderr_of(&output));
    assert_eq!(fs::read_to_string(&broken).expect("read"), before, "refusal must not write");
}

// ===== export =====

#[test]
fn export_json_is_deterministic_and_quiet() {
    let args = ["export", &corpus("healthcare/root.scd"), "--format", "json"];
    let first = scd(&args);
    let second = scd(&args);
    assert_eq!(status_of(&first), 0);
    assert!(stderr_of(&first).is_empty());
    assert_eq!(first.stdout, second.stdout);
    let value: serde_json::Value = serde_json::from_slice(&first.stdout).expect("valid JSON");
    assert_eq!(value["scdVersion"], "1");
}

#[test]
fn export_dot_level_draws_the_child_unit() {
    let output = scd(&[
        "export",
        &corpus("healthcare/root.scd"),
        "--format",
        "dot",
        "--level",
        "Person",
    ]);
    assert_eq!(status_of(&output), 0);
    let dot = stdout_of(&output);
    assert_eq!(dot.matches("label=\"«system»").count(), 2);
    assert_eq!(dot.matches(" -- ").count(), 1);
    assert!(dot.contains("[label=\"2 mappings\"]"), "{dot}");
}

#[test]
fn export_rejects_unknown_format_and_misplaced_level() {
    let root = corpus("cell/root.scd");
    let unknown = scd(&["export", &root, "--format", "yaml"]);
    assert_eq!(status_of(&unknown), 2);

    let misplaced = scd(&["export", &root, "--format", "json", "--level", "Cell"]);
    assert_eq!(status_of(&misplaced), 2);
    assert!(stderr_of(&misplaced).contains("--level"));
}

#[test]
fn export_dot_unknown_level_is_a_model_error() {
    let output = scd(&[
        "export",
        &corpus("cell/root.scd"),
        "--format",
        "dot",
        "--level",
        "Nucleus",
    ]);
    assert_eq!(status_of(&output), 1);
    assert!(stderr_of(&output).contains("E-QRY-001"));
}

#[test]
fn export_unresolvable_model_exits_one() {
    let dir = tempfile::tempdir().expect("tempdir");
    let root = temp_copy(
        &dir,
        "root.scd",
        "scd m {\n  concrete system S {\n    composition {\n      a;\n    }\n    explode \"gone.scd\";\n  }\n}\n",
    );
    let output = scd(&["export", &root.to_string_lossy(), "--format", "json"]);
    assert_eq!(status_of(&output), 1);
    assert!(stderr_of(&output).contains("E-LVL-001"));
}

// ===== query =====

#[test]
fn query_boundary_prints_the_partition() {
    let output = scd(&["query", &corpus("cell/root.scd"), "boundary", "Cell"]);
    assert_eq!(status_of(&output), 0);
    assert_eq!(stdout_of(&output), "boundary: membrane\ninternal: cytoplasm\n");
}

#[test]
fn query_boundary_unknown_system_is_an_error() {
    let output = scd(&["query", &corpus("cell/root.scd"), "boundary", "Mitochondrion"]);
    assert_eq!(status_of(&output), 1);
    assert!(stderr_of(&output).contains("E-QRY-001"));
}

#[test]
fn query_drill_lists_child_level_systems() {
    let output = scd(&["query", &corpus("healthcare/root.scd"), "drill", "Person"]);
    assert_eq!(status_of(&output), 0);
    assert_eq!(stdout_of(&output), "Body\nMind\n");
}

#[test]
fn query_drill_on_unexploded_system_is_an_error() {
    let output = scd(&["query", &corpus("healthcare/root.scd"), "drill", "CareTeam"]);
    assert_eq!(status_of(&output), 1);
    assert!(stderr_of(&output).contains("E-QRY-002"));
}

#[test]
fn query_eval_prints_sorted_key_value_lines() {
    let dir = tempfile::tempdir().expect("tempdir");
    let values = temp_copy(
        &dir,
        "vals.txt",
        "# leaf cell counts\nThorax.volume = 4.8\nThorax.Lung.Epithelium.cellCount = 120\nThorax.Lung.Capillaries.cellCount = 30\nThorax.Pleura.cellCount = 7\n",
    );
    let output = scd(&[
        "query",
        &corpus("body-location/root.scd"),
        "eval",
        "--values",
        &values.to_string_lossy(),
    ]);
    assert_eq!(status_of(&output), 0);
    assert_eq!(stdout_of(&output), "Thorax.Lung.cellCount=150\nThorax.cellCount=157\n");
}

#[test]
fn query_eval_target_restricts_to_a_subtree() {
    let dir = tempfile::tempdir().expect("tempdir");
    let values = temp_copy(
        &dir,
        "vals.txt",
        "Thorax.Lung.Epithelium.cellCount = 120\nThorax.Lung.Capillaries.cellCount = 30\nThorax.Pleura.cellCount = 7\n",
    );
    let output = scd(&[
        "query",
        &corpus("body-location/root.scd"),
        "eval",
        "Thorax.Lung",
        "--values",
        &values.to_string_lossy(),
    ]);
    assert_eq!(status_of(&output), 0);
    assert_eq!(stdout_of(&output), "Thorax.Lung.cellCount=150\n");
}

#[test]
fn query_eval_without_values_reports_unvalued_leaves() {
    let output = scd(&["query", &corpus("body-location/root.scd"), "eval"]);
    assert_eq!(status_of(&output), 1);
    assert!(stderr_of(&output).contains("E-EVL-001"));
}

#[test]
fn query_eval_missing_or_malformed_values_file_is_a_usage_failure() {
    let root = corpus("body-location/root.scd");
    let missing = scd(&["query", &root, "eval", "--values", "no-such-values.txt"]);
    assert_eq!(status_of(&missing), 2);

    let dir = tempfile::tempdir().expect("tempdir");
    let bad = temp_copy(&dir, "bad.txt", "Thorax.volume = 1\nThorax.volume = 2\n");
    let malformed = scd(&["query", &root, "eval", "--values", &bad.to_string_lossy()]);
    assert_eq!(status_of(&malformed), 2);
}

#[test]
fn query_refuses_models_with_validation_errors() {
    let output = scd(&["query", &corpus("coronavirus-broken/root.scd"), "boundary", "HostCell"]);
    assert_eq!(status_of(&output), 1);
    assert!(stdout_of(&output).is_empty(), "no result on invalid models");
    assert!(stderr_of(&output).contains("E-MAP-001"));
}
