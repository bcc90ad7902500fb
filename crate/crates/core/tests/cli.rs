use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_pgnmpc");
const DATA: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data");

fn pgnmpc(out: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn run_writes_trace_with_one_row_per_sample() {
    let dir = tempfile::tempdir().unwrap();
    let o = pgnmpc(dir.path(), &["run", "--set", "duration_min=12"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut reader = csv::Reader::from_path(dir.path().join("trace.csv")).unwrap();
    assert_eq!(reader.headers().unwrap().len(), 26);
    assert_eq!(reader.records().count(), 121);
    let metrics = read_json(&dir.path().join("metrics.json"));
    assert!(metrics["rise_time_min"].is_number());
}

#[test]
fn missing_patient_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = pgnmpc(
        dir.path(),
        &["run", "--patient", "/nonexistent/patient.json"],
    );
    assert_eq!(o.status.code(), Some(3));
    assert!(
        stderr(&o).contains("/nonexistent/patient.json"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn unknown_override_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = pgnmpc(dir.path(), &["run", "--set", "controller.nonsense=3"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(pgnmpc(dir.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        pgnmpc(dir.path(), &["compare-iterations"]).status.code(),
        Some(2)
    );
    assert_eq!(
        pgnmpc(dir.path(), &["run", "--seed", "x"]).status.code(),
        Some(2)
    );
}

#[test]
fn overrides_are_echoed_and_reproduce_the_run() {
    let first = tempfile::tempdir().unwrap();
    let o = pgnmpc(
        first.path(),
        &[
            "run",
            "--set",
            "duration_min=8",
            "--set",
            "controller.mode.count=1000",
            "--seed",
            "11",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let echoed = read_json(&first.path().join("resolved_scenario.json"));
    assert_eq!(echoed["controller"]["mode"]["count"], 1000);
    assert_eq!(echoed["seed"], 11);

    let second = tempfile::tempdir().unwrap();
    let patient = first.path().join("resolved_patient.json");
    let scenario = first.path().join("resolved_scenario.json");
    let o = pgnmpc(
        second.path(),
        &[
            "run",
            "--patient",
            patient.to_str().unwrap(),
            "--scenario",
            scenario.to_str().unwrap(),
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let a = std::fs::read(first.path().join("trace.csv")).unwrap();
    let b = std::fs::read(second.path().join("trace.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn noisy_runs_reproduce_with_the_same_seed() {
    let scenario = format!("{DATA}/scenario_filtered.json");
    let traces: Vec<Vec<u8>> = ["5", "5", "6"]
        .iter()
        .map(|seed| {
            let dir = tempfile::tempdir().unwrap();
            let o = pgnmpc(
                dir.path(),
                &[
                    "run",
                    "--scenario",
                    &scenario,
                    "--seed",
                    seed,
                    "--set",
                    "duration_min=5",
                ],
            );
            assert!(o.status.success(), "{}", stderr(&o));
            std::fs::read(dir.path().join("trace.csv")).unwrap()
        })
        .collect();
    assert_eq!(traces[0], traces[1]);
    assert_ne!(traces[0], traces[2]);
}

#[test]
fn compare_with_one_count_equals_run() {
    let run_dir = tempfile::tempdir().unwrap();
    let cmp_dir = tempfile::tempdir().unwrap();
    let set = ["--set", "duration_min=6"];
    assert!(pgnmpc(run_dir.path(), &["run", set[0], set[1]])
        .status
        .success());
    let o = pgnmpc(
        cmp_dir.path(),
        &["compare-iterations", "--counts", "50", set[0], set[1]],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let a = std::fs::read(run_dir.path().join("trace.csv")).unwrap();
    let b = std::fs::read(cmp_dir.path().join("trace_count_50.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn compare_rejects_bad_count_lists() {
    let dir = tempfile::tempdir().unwrap();
    let o = pgnmpc(dir.path(), &["compare-iterations", "--counts", "10,10"]);
    assert_eq!(o.status.code(), Some(3));
    let o = pgnmpc(dir.path(), &["compare-iterations", "--counts", "0"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn more_iterations_track_the_target_more_closely() {
    let dir = tempfile::tempdir().unwrap();
    let o = pgnmpc(
        dir.path(),
        &[
            "compare-iterations",
            "--counts",
            "10,50,1000",
            "--set",
            "duration_min=30",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = read_json(&dir.path().join("metrics.json"));
    let errors: Vec<f64> = summary["runs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["metrics"]["terminal_error"].as_f64().unwrap())
        .collect();
    assert_eq!(errors.len(), 3);
    assert!(
        errors[2] <= errors[1] && errors[1] <= errors[0],
        "{errors:?}"
    );
    let combined = csv::Reader::from_path(dir.path().join("combined.csv"))
        .unwrap()
        .records()
        .count();
    assert_eq!(combined, 3 * 301);
}

#[test]
fn suite_creates_output_directory() {
    let root = tempfile::tempdir().unwrap();
    let out = root.path().join("nested").join("suite");
    let o = pgnmpc(&out, &["suite"]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(matches!(o.status.code(), Some(0 | 1)), "{}", stderr(&o));
    assert!(out.join("suite_report.json").exists());
    assert_eq!(
        stdout
            .lines()
            .filter(|l| l.starts_with("[PASS]") || l.starts_with("[FAIL]"))
            .count(),
        11
    );
}

#[test]
fn oversized_step_fails_the_suite_gracefully() {
    let dir = tempfile::tempdir().unwrap();
    let o = pgnmpc(dir.path(), &["suite", "--set", "controller.gamma=1"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("[FAIL] A1"), "{stdout}");
    let report = read_json(&dir.path().join("suite_report.json"));
    assert_eq!(report["passed"], false);
}
