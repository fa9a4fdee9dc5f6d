//! End-to-end tests of the installed binary: exit codes, output shapes,
//! determinism across thread counts, and the documented failure modes.

use std::path::Path;
use std::process::{Command, Output};

fn locdep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_locdep"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

const C5: &str = r#"{"n":5,"edges":[[0,1],[1,2],[2,3],[3,4],[4,0]]}"#;

#[test]
fn covers_prints_exact_and_decimal_chi_star() {
    let out = locdep(&["covers", "--graph", C5]);
    assert!(out.status.success(), "stderr: {:?}", out.stderr);
    let text = stdout(&out);
    assert!(text.contains("chi: 3"), "missing chi in {text}");
    assert!(
        text.contains("chi_star: 5/2 = 2.5"),
        "missing exact+decimal chi_star in {text}"
    );
}

#[test]
fn covers_json_carries_witness_parts() {
    let out = locdep(&["covers", "--graph", C5, "--format", "json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).expect("valid json");
    assert_eq!(v["chi"], 3);
    assert_eq!(v["chi_star"]["exact"], "5/2");
    assert_eq!(v["cover"].as_array().unwrap().len(), 5);
    let weight_sum: f64 = v["cover"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["weight_decimal"].as_f64().unwrap())
        .sum();
    assert!((weight_sum - 2.5).abs() < 1e-12);
}

#[test]
fn bound_curve_csv_matches_closed_form() {
    let out = locdep(&[
        "bound",
        "--name",
        "mcdiarmid-hd",
        "--k",
        "1",
        "--l",
        "1",
        "--c",
        "1,1",
        "--t-grid",
        "1:1:1",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,raw,capped"));
    let row = lines.next().expect("one data row");
    let cols: Vec<&str> = row.split(',').collect();
    let raw: f64 = cols[1].parse().unwrap();
    assert!((raw - (-1.0f64).exp()).abs() < 1e-12, "got {raw}");
}

#[test]
fn bound_rejects_missing_parameters() {
    let out = locdep(&["bound", "--name", "janson-hoeffding", "--t-grid", "0:1:1"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("chi-star"), "unexpected error text: {err}");
}

#[test]
fn unknown_flags_are_hard_errors() {
    let out = locdep(&["covers", "--graph", C5, "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn certify_reports_holding_certificate_with_exit_zero() {
    // f(x) = x0 + x1 on {0,1}^2 counts ones, the canonical (1,0) case.
    let out = locdep(&[
        "certify",
        "--f",
        r#"{"sizes":[2,2],"values":[0,1,1,2]}"#,
        "--variant",
        "sb",
        "--a",
        "1",
        "--b",
        "0",
        "--exact",
    ]);
    assert!(out.status.success(), "stderr: {:?}", out.stderr);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["holds"], true);
}

#[test]
fn certify_failing_certificate_exits_one_with_witness() {
    // With a = 0, b = 1 the increments sum to 2 > 1 at the all-ones point.
    let out = locdep(&[
        "certify",
        "--f",
        r#"{"sizes":[2,2],"values":[0,1,1,2]}"#,
        "--variant",
        "sb",
        "--a",
        "0",
        "--b",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["holds"], false);
    assert!(v["witness"]["condition"].as_str().unwrap().contains("increment-total"));
}

#[test]
fn certify_convex_distance_builtin() {
    let out = locdep(&[
        "certify",
        "--dt-sizes",
        "2,2",
        "--dt-points",
        "0,0;1,1",
    ]);
    assert!(out.status.success(), "stderr: {:?}", out.stderr);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["holds"], true);
    assert_eq!(v["variant"], "weak-alpha-sb");
}

fn write_config(dir: &Path, name: &str, value: &serde_json::Value) -> String {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn verify_passes_and_reruns_identically_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "config.json",
        &serde_json::json!({
            "ensemble": {"name": "m-dependent",
                         "params": {"n": 16, "m": 2, "family": "window-sum", "source": "signs"}},
            "mode": "tail",
            "statistic": {"kind": "sum"},
            "centering": "sample-mean",
            "t_grid": "0:16:4",
            "replicas": 3000,
            "seed": 5,
            "ci_level": 0.99,
            "bound": {"bound": "janson-hoeffding",
                      "chi_star": {"from": "chromatic"},
                      "ranges": {"from": "declared"}}
        }),
    );
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let run_a = locdep(&[
        "verify",
        "--config",
        &config,
        "--out",
        out_a.to_str().unwrap(),
        "--threads",
        "1",
    ]);
    assert!(run_a.status.success(), "stderr: {:?}", run_a.stderr);
    assert!(stdout(&run_a).contains("verdict: PASS"));
    let run_b = locdep(&[
        "verify",
        "--config",
        &config,
        "--out",
        out_b.to_str().unwrap(),
        "--threads",
        "3",
    ]);
    assert!(run_b.status.success());
    for name in ["report.csv", "report.json"] {
        let a = std::fs::read(out_a.join(name)).unwrap();
        let b = std::fs::read(out_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between thread counts");
    }
}

#[test]
fn verify_fail_verdict_exits_one_with_fail_rows() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "config.json",
        &serde_json::json!({
            "ensemble": {"name": "counterexample", "params": {"n": 10}},
            "mode": "tail",
            "statistic": {"kind": "paired-product-half-sum"},
            "centering": "none",
            "t_grid": [5.0],
            "replicas": 4000,
            "seed": 3,
            "ci_level": 0.99,
            "bound": {"bound": "mcdiarmid-hd",
                      "kl": {"from": "value", "k": 1, "l": 1},
                      "c": {"from": "uniform", "value": 1.0, "count": 10}}
        }),
    );
    let out_dir = dir.path().join("out");
    let run = locdep(&["verify", "--config", &config, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(1), "stdout: {}", stdout(&run));
    let csv = std::fs::read_to_string(out_dir.join("report.csv")).unwrap();
    assert!(csv.contains("FAIL"), "no FAIL rows in {csv}");
}

#[test]
fn verify_invalid_config_exits_two_with_error_json() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "config.json",
        &serde_json::json!({
            "ensemble": {"name": "no-such-ensemble", "params": {}},
            "mode": "tail",
            "statistic": {"kind": "sum"},
            "t_grid": "0:1:1",
            "replicas": 1000,
            "seed": 1,
            "ci_level": 0.99
        }),
    );
    let out_dir = dir.path().join("out");
    let run = locdep(&["verify", "--config", &config, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(2));
    let err: serde_json::Value =
        serde_json::from_slice(&run.stderr).expect("machine-readable error JSON");
    assert!(err["error"].is_string());
}

#[test]
fn example_dump_is_deterministic_and_evaluates_statistics() {
    let args = [
        "example",
        "--spec",
        r#"{"name":"counterexample","params":{"n":4}}"#,
        "--seed",
        "7",
        "--statistic",
        r#"{"kind":"paired-product-half-sum"}"#,
    ];
    let first = locdep(&args);
    assert!(first.status.success());
    let second = locdep(&args);
    assert_eq!(first.stdout, second.stdout);
    let v: serde_json::Value = serde_json::from_str(&stdout(&first)).unwrap();
    assert_eq!(v["vars"].as_array().unwrap().len(), 8);
    // The paired half-sum always collapses to n*Q/2 = 2Q for n = 4 pairs.
    let value = v["value"].as_f64().unwrap();
    assert!(value == 2.0 || value == -2.0, "got {value}");
}
