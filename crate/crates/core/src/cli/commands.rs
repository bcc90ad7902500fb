use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::Serialize;

use super::{CliError, ExitStatus, RunManifest};
use crate::pkpd::{PatientFile, PatientModel};
use crate::sim::{compute_metrics, run_scenario, MetricsReport, Scenario, SimTrace};
use crate::solver::SolverMode;
use crate::suite::{run_suite, SuiteReport};

/// Outcome of [`cmd_run`].
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub rows: usize,
    pub metrics: Option<MetricsReport>,
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display(), e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(path.display(), e))?;
    fs::write(path, text + "\n").map_err(|e| CliError::io(path.display(), e))
}

fn write_trace(path: &Path, trace: &SimTrace) -> Result<(), CliError> {
    trace
        .write_csv(path)
        .map_err(|e| CliError::io(path.display(), e))
}

/// Writes the resolved inputs so the run can be repeated with
/// `--patient resolved_patient.json --scenario resolved_scenario.json`.
fn write_echo(dir: &Path, patient: &PatientFile, scenario: &Scenario) -> Result<(), CliError> {
    write_json(&dir.join("resolved_patient.json"), patient)?;
    write_json(&dir.join("resolved_scenario.json"), scenario)
}

/// Runs one scenario and writes `trace.csv`, `metrics.json`,
/// `resolved_patient.json` and `resolved_scenario.json` into the output
/// directory. A solver failure still writes the partial trace.
pub fn cmd_run(manifest: &RunManifest) -> Result<RunSummary, CliError> {
    let (file, model, scenario) = manifest.resolve()?;
    let dir = &manifest.output_dir;
    create_dir(dir)?;
    write_echo(dir, &file, &scenario)?;

    let trace = match run_scenario(&model, &scenario) {
        Ok(t) => t,
        Err(abort) => {
            write_trace(&dir.join("trace.csv"), &abort.partial)?;
            let mut err = CliError::from(abort.error);
            err.message = format!(
                "{} (partial trace with {} rows written)",
                err.message,
                abort.partial.len()
            );
            return Err(err);
        }
    };
    write_trace(&dir.join("trace.csv"), &trace)?;
    let metrics = if trace.is_empty() {
        None
    } else {
        Some(compute_metrics(&trace, &scenario)?)
    };
    write_json(&dir.join("metrics.json"), &metrics)?;
    Ok(RunSummary {
        rows: trace.len(),
        metrics,
    })
}

/// Outcome of [`cmd_compare_iterations`], in the order of the requested
/// counts.
#[derive(Debug, Clone, Serialize)]
pub struct CompareSummary {
    pub runs: Vec<CountMetrics>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CountMetrics {
    pub count: usize,
    pub metrics: Option<MetricsReport>,
}

fn run_with_count(
    model: &PatientModel,
    scenario: &Scenario,
    count: usize,
) -> Result<SimTrace, CliError> {
    let mut s = scenario.clone();
    s.controller.mode = SolverMode::FixedIterations { count };
    run_scenario(model, &s).map_err(|abort| {
        let mut err = CliError::from(abort.error);
        err.message = format!("with {count} iterations: {}", err.message);
        err
    })
}

/// One run per iteration count. Writes `trace_count_<n>.csv` per run,
/// `combined.csv` (the same rows with a leading `count` column),
/// `metrics.json` and the resolved inputs.
pub fn cmd_compare_iterations(
    manifest: &RunManifest,
    counts: &[usize],
) -> Result<CompareSummary, CliError> {
    if counts.is_empty() {
        return Err(CliError::config("at least one iteration count is required"));
    }
    if counts.contains(&0) {
        return Err(CliError::config("iteration counts must be positive"));
    }
    let unique: BTreeSet<_> = counts.iter().collect();
    if unique.len() != counts.len() {
        return Err(CliError::config(format!(
            "duplicate iteration counts in {counts:?}"
        )));
    }
    let (file, model, scenario) = manifest.resolve()?;
    let dir = &manifest.output_dir;
    create_dir(dir)?;
    write_echo(dir, &file, &scenario)?;

    let traces: Vec<Result<SimTrace, CliError>> = std::thread::scope(|s| {
        let handles: Vec<_> = counts
            .iter()
            .map(|&c| {
                let (model, scenario) = (&model, &scenario);
                s.spawn(move || run_with_count(model, scenario, c))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("comparison worker panicked"))
            .collect()
    });

    let combined_path = dir.join("combined.csv");
    let mut combined = csv::Writer::from_path(&combined_path)
        .map_err(|e| CliError::io(combined_path.display(), e))?;
    let mut header = vec!["count".to_string()];
    header.extend(SimTrace::csv_header());
    combined
        .write_record(&header)
        .map_err(|e| CliError::io(combined_path.display(), e))?;

    let mut runs = Vec::with_capacity(counts.len());
    for (&count, trace) in counts.iter().zip(traces) {
        let trace = trace?;
        write_trace(&dir.join(format!("trace_count_{count}.csv")), &trace)?;
        for row in &trace.rows {
            let mut record = vec![count.to_string()];
            record.extend(SimTrace::csv_record(row));
            combined
                .write_record(&record)
                .map_err(|e| CliError::io(combined_path.display(), e))?;
        }
        let metrics = if trace.is_empty() {
            None
        } else {
            Some(compute_metrics(&trace, &scenario)?)
        };
        runs.push(CountMetrics { count, metrics });
    }
    combined
        .flush()
        .map_err(|e| CliError::io(combined_path.display(), e))?;

    let summary = CompareSummary { runs };
    write_json(&dir.join("metrics.json"), &summary)?;
    Ok(summary)
}

/// Runs the acceptance battery and writes `suite_report.json` plus the
/// resolved inputs. A failing criterion is not an error here; check
/// [`SuiteReport::passed`] (the binary maps it to exit code 1).
pub fn cmd_suite(manifest: &RunManifest) -> Result<SuiteReport, CliError> {
    let (file, model, scenario) = manifest.resolve()?;
    let dir = &manifest.output_dir;
    create_dir(dir)?;
    write_echo(dir, &file, &scenario)?;
    let report = run_suite(&model, &scenario);
    write_json(&dir.join("suite_report.json"), &report)?;
    Ok(report)
}

impl SuiteReport {
    pub fn exit_status(&self) -> ExitStatus {
        if self.passed {
            ExitStatus::Success
        } else {
            ExitStatus::SuiteFailure
        }
    }
}
