//! End-to-end tests of the `normtest` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_normtest"));
    cmd.env_remove("NORMTEST_THREADS");
    cmd
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json_fixed_point(text: &str) {
    let first: serde_json::Value = serde_json::from_str(text).unwrap();
    let again = serde_json::to_string(&first).unwrap();
    let second: serde_json::Value = serde_json::from_str(&again).unwrap();
    assert_eq!(first, second);
}

#[test]
fn test_command_reports_statistic_and_pvalue() {
    let iris = fixture("iris_virginica.csv");
    let out = run(&["test", "--input", iris.to_str().unwrap(), "--a", "1,2", "--reps", "500", "--quiet", "--format", "json"]);
    let text = stdout(&out);
    json_fixed_point(&text);
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(value["n"], 50);
    assert_eq!(value["d"], 4);
    let results = value["results"].as_array().unwrap();
    assert_eq!(results.len(), 2);
    for r in results {
        let p = r["p_value"].as_f64().unwrap();
        assert!(p > 0.0 && p <= 1.0);
    }
}

#[test]
fn reruns_are_byte_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let iris = fixture("iris_setosa.csv");
    let mut outputs = Vec::new();
    for (i, workers) in ["1", "4", "1"].iter().enumerate() {
        let path = dir.path().join(format!("out{i}.csv"));
        let status = bin()
            .args(["test", "--input", iris.to_str().unwrap(), "--a", "0.5", "--reps", "800", "--seed", "3", "--quiet"])
            .args(["--workers", workers, "--format", "csv", "--output", path.to_str().unwrap()])
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);

    let env_run = bin()
        .env("NORMTEST_THREADS", "2")
        .args(["test", "--input", iris.to_str().unwrap(), "--a", "0.5", "--reps", "800", "--seed", "3", "--quiet", "--format", "csv"])
        .output()
        .unwrap();
    assert_eq!(env_run.stdout, outputs[0]);
}

#[test]
fn crit_table_json_round_trips_with_limit_rows() {
    let out = run(&[
        "crit-table", "--d", "1", "--n", "10,inf", "--a", "1", "--reps", "400", "--m", "100", "--ell", "2000", "--quiet", "--format", "json",
    ]);
    let text = stdout(&out);
    json_fixed_point(&text);
    let table = normtest::nulldist::CriticalValueTable::from_json(&text).unwrap();
    assert_eq!(table.entries.len(), 2);
    assert_eq!(table.to_json().unwrap().trim(), text.trim());
}

#[test]
fn crit_table_csv_is_readable() {
    let out = run(&["crit-table", "--d", "2", "--n", "12", "--a", "0.5,1", "--alpha", "0.05,0.1", "--reps", "300", "--quiet", "--format", "csv"]);
    let text = stdout(&out);
    let table = normtest::nulldist::CriticalValueTable::read_csv(text.as_bytes()).unwrap();
    assert_eq!(table.entries.len(), 4);
}

#[test]
fn checkpoint_resume_gives_identical_output() {
    let dir = tempfile::tempdir().unwrap();
    let cp = dir.path().join("run.json");
    let args = ["crit-table", "--d", "1", "--n", "8", "--a", "1", "--reps", "12000", "--seed", "4", "--quiet", "--format", "csv"];
    let plain = stdout(&run(&args));
    let with_cp = stdout(&bin().args(args).args(["--checkpoint", cp.to_str().unwrap()]).output().unwrap());
    assert_eq!(plain, with_cp);
    // the finished checkpoint is reused without recomputation
    let resumed = stdout(&bin().args(args).args(["--checkpoint", cp.to_str().unwrap()]).output().unwrap());
    assert_eq!(plain, resumed);
}

#[test]
fn power_command_lists_statistics() {
    let out = run(&[
        "power", "--d", "2", "--n", "20", "--alt", "normal", "--alt", "mt:nu=3", "--a", "1", "--competitor", "bhep:a=1", "--competitor",
        "hvinf", "--reps", "300", "--quiet", "--format", "json",
    ]);
    let text = stdout(&out);
    json_fixed_point(&text);
    let report: normtest::study::PowerReport = serde_json::from_str(&text).unwrap();
    assert_eq!(report.rows.len(), 2);
    assert_eq!(report.critical_values.len(), 3);
    assert_eq!(serde_json::to_string_pretty(&report).unwrap().trim(), text.trim());
}

#[test]
fn delta_ci_and_table_output() {
    let iris = fixture("iris_versicolor.csv");
    let out = run(&["delta-ci", "--input", iris.to_str().unwrap(), "--a", "1"]);
    let text = stdout(&out);
    assert!(text.lines().next().unwrap().contains("delta_hat"));
    let json = stdout(&run(&["delta-ci", "--input", iris.to_str().unwrap(), "--a", "1", "--format", "json"]));
    json_fixed_point(&json);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    let (lo, hi) = (v["interval"]["lower"].as_f64().unwrap(), v["interval"]["upper"].as_f64().unwrap());
    let est = v["estimate"]["delta_hat"].as_f64().unwrap();
    assert!(lo <= est && est <= hi);
}

#[test]
fn validate_exit_codes() {
    let iris = fixture("iris_versicolor.csv");
    let input = iris.to_str().unwrap();
    let retain = run(&["validate", "--input", input, "--a", "1", "--delta0", "1e-6"]);
    assert_eq!(retain.status.code(), Some(0));
    let reject = run(&["validate", "--input", input, "--a", "1", "--delta0", "1000"]);
    assert_eq!(reject.status.code(), Some(2));
    let error = run(&["validate", "--input", "/nonexistent.csv", "--delta0", "1"]);
    assert_eq!(error.status.code(), Some(1));
    let bad_flag = run(&["validate", "--input", input]);
    assert_eq!(bad_flag.status.code(), Some(1));
}

#[test]
fn headerless_and_custom_delimiter_input() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("data.tsv");
    let rows: Vec<String> = (0..12).map(|i| format!("{}\t{}", (i as f64).sin(), ((i * i) as f64).cos())).collect();
    std::fs::write(&path, rows.join("\n")).unwrap();
    let out = run(&["delta-ci", "--input", path.to_str().unwrap(), "--delimiter", "\t", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["estimate"]["n"], 12);
    assert_eq!(v["estimate"]["d"], 2);
}

#[test]
fn limit_quantile_command() {
    let out = run(&["limit-quantile", "--d", "1", "--a", "1", "--m", "150", "--ell", "3000", "--format", "csv"]);
    let text = stdout(&out);
    let table = normtest::nulldist::CriticalValueTable::read_csv(text.as_bytes()).unwrap();
    assert_eq!(table.entries[0].n, normtest::nulldist::SampleSize::Infinite);
    assert!(table.entries[0].quantile > 0.0);
}

#[test]
fn singular_data_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("flat.csv");
    std::fs::write(&path, "x,y\n1,2\n2,4\n3,6\n4,8\n").unwrap();
    let out = run(&["test", "--input", path.to_str().unwrap(), "--reps", "10", "--quiet"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}
