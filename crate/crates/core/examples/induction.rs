//! Nominal induction and maintenance with 50 gradient iterations per sample.
//! Prints the clinical metrics and writes the trace as CSV.
//!
//! ```text
//! cargo run -p pgnmpc --example induction
//! ```

use pgnmpc::pkpd::{PatientFile, PatientModel};
use pgnmpc::sim::{compute_metrics, run_scenario, Scenario};

pub fn run_example() -> pgnmpc::Result<()> {
    let file = PatientFile::load(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/data/patient_nominal.json"
    ))?;
    let scenario = Scenario::load(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/data/scenario_nominal.json"
    ))?;
    let patient = PatientModel::from_file(&file, scenario.ts_min)?;

    let trace = run_scenario(&patient, &scenario)?;
    for row in trace.rows.iter().step_by(20).take(8) {
        println!(
            "t = {:4.1} min  BIS {:6.2}  propofol {:6.2} mg/min  remifentanil {:.4} ug/min",
            row.time_min, row.measured_bis, row.applied_input[0], row.applied_input[1]
        );
    }
    let metrics = compute_metrics(&trace, &scenario)?;
    println!("{}", serde_json::to_string_pretty(&metrics)?);

    let path = std::env::temp_dir().join("pgnmpc_induction_trace.csv");
    trace.write_csv(&path)?;
    println!("trace written to {}", path.display());
    Ok(())
}

fn main() -> pgnmpc::Result<()> {
    run_example()
}
