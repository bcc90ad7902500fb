//! The same 30-minute induction with 10, 50 and 1000 iterations per sample:
//! more iterations give a faster response and a smaller remaining error.
//!
//! ```text
//! cargo run --release -p pgnmpc --example iteration_comparison
//! ```

use pgnmpc::pkpd::{PatientFile, PatientModel};
use pgnmpc::sim::Scenario;
use pgnmpc::suite::iteration_comparison;

pub fn run_example() -> pgnmpc::Result<()> {
    let file = PatientFile::load(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/data/patient_nominal.json"
    ))?;
    let patient = PatientModel::from_file(&file, 0.1)?;
    println!(
        "{:>6} {:>10} {:>12} {:>14}",
        "count", "rise_min", "min_BIS", "terminal_err"
    );
    for (count, run) in iteration_comparison(&patient, &Scenario::default())? {
        let m = &run.metrics;
        println!(
            "{count:>6} {:>10.1} {:>12.2} {:>14.4}",
            m.rise_time_min.unwrap_or(f64::NAN),
            m.min_bis_induction.unwrap_or(f64::NAN),
            m.terminal_error
        );
    }
    Ok(())
}

fn main() -> pgnmpc::Result<()> {
    run_example()
}
