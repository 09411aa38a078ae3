//! End-to-end checks of the binary: outputs, exit codes, and JSON
//! determinism.

use std::process::{Command, Output};

fn arrovian(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_arrovian"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("utf-8 output")
}

#[test]
fn metric_prints_the_distance() {
    let out = arrovian(&["metric", "--kind", "kt", "0>1>2", "2>1>0"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "3");

    let out = arrovian(&["metric", "--kind", "sf", "0>1>2", "1>2>0"]);
    assert_eq!(stdout(&out).trim(), "4");
}

#[test]
fn diameter_matches_closed_form() {
    let out = arrovian(&["diameter", "--kind", "kt", "--m", "4"]);
    assert_eq!(stdout(&out).trim(), "6");
    let out = arrovian(&["diameter", "--kind", "sf", "--m", "5"]);
    assert_eq!(stdout(&out).trim(), "12");
}

#[test]
fn usage_errors_exit_2() {
    // unknown flag is rejected by the parser
    let out = arrovian(&["metric", "--kind", "kt", "--bogus", "0>1", "1>0"]);
    assert_eq!(out.status.code(), Some(2));
    // mismatched alternative sets are an argument error
    let out = arrovian(&["metric", "--kind", "kt", "0>1", "0>1>2"]);
    assert_eq!(out.status.code(), Some(2));
    // enumeration over the cap is a capacity error
    let out = arrovian(&["diameter", "--kind", "kt", "--m", "9"]);
    assert_eq!(out.status.code(), Some(2));
    // ties are outside the metric domain
    let out = arrovian(&["metric", "--kind", "kt", "0=1", "0>1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn cyclic_commands_print_rotations() {
    let out = arrovian(&["cyclic", "--m", "4", "--blocks", "0,1|2,3"]);
    assert_eq!(stdout(&out), "0>1>2>3\n2>3>0>1\n");

    let out = arrovian(&[
        "cyclic-profile", "--n", "4", "--t", "2", "--sync", "async", "--blocks", "0|1",
    ]);
    assert_eq!(stdout(&out), "0>1\n1>0\n");
}

#[test]
fn safe_area_lists_members() {
    let out = arrovian(&[
        "safe-area", "--t", "1", "--wo", "strict", "--profile", "0>1>2,1>2>0,2>0>1", "--i", "2",
    ]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "1>2>0\n");
}

#[test]
fn simulate_reports_verdicts_and_exit_codes() {
    let out = arrovian(&[
        "simulate", "--proto", "flood", "--n", "3", "--t", "1", "--sync", "sync", "--profile",
        "0>1>2,0>1>2,0>1>2", "--task", "kset:1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("kset: pass"));

    // the cyclic profile defeats 1-agreement under Kendall tau
    let out = arrovian(&[
        "simulate", "--proto", "flood", "--n", "3", "--t", "1", "--sync", "sync", "--profile",
        "0>1>2,1>2>0,2>0>1", "--task", "approx:1:kt", "--json",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.contains("\"approx\":false"));
    assert!(text.contains("\"unanimity\":true"));
}

#[test]
fn witness_json_is_byte_identical_across_runs() {
    let args = [
        "witness", "--task", "approx", "--n", "4", "--t", "2", "--sync", "sync", "--m", "4",
        "--eps", "3", "--metric", "kt", "--json",
    ];
    let first = arrovian(&args);
    let second = arrovian(&args);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout);
    assert!(stdout(&first).contains("\"verdict\":\"verified\""));
}

#[test]
fn witness_boundary_is_not_applicable() {
    let out = arrovian(&[
        "witness", "--task", "approx", "--n", "4", "--t", "2", "--sync", "sync", "--m", "4",
        "--eps", "4", "--metric", "kt",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("not applicable"));
}

#[test]
fn kset_witness_examples_from_the_cli() {
    let out = arrovian(&[
        "witness", "--task", "kset", "--n", "4", "--t", "2", "--sync", "sync", "--m", "3", "--k",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("verdict: verified"));

    let out = arrovian(&[
        "witness", "--task", "kset", "--n", "4", "--t", "1", "--sync", "sync", "--m", "3", "--k",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("not applicable"));
}

#[test]
fn arrow_verify_counts() {
    let out = arrovian(&["arrow-verify", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let value: serde_json::Value = serde_json::from_str(stdout(&out).trim()).expect("one document");
    assert_eq!(value["candidates"], 531441);
    assert_eq!(value["valid"], 2);
    assert_eq!(value["dictatorial"], 2);
}
