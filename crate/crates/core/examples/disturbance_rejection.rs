//! Output disturbances during maintenance: BIS jumps by +10 at minute 20 and
//! by −10 at minute 40, one minute each.
//!
//! ```text
//! cargo run -p pgnmpc --example disturbance_rejection
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
        "/data/scenario_disturbance.json"
    ))?;
    let patient = PatientModel::from_file(&file, scenario.ts_min)?;
    let trace = run_scenario(&patient, &scenario)?;

    for row in trace
        .rows
        .iter()
        .filter(|r| (19.5..23.0).contains(&r.time_min) || (39.5..43.0).contains(&r.time_min))
        .step_by(5)
    {
        println!(
            "t = {:4.1}  offset {:+5.1}  measured {:6.2}  true {:6.2}  propofol {:6.2}",
            row.time_min,
            row.disturbance_offset,
            row.measured_bis,
            row.true_bis,
            row.applied_input[0]
        );
    }
    let m = compute_metrics(&trace, &scenario)?;
    println!(
        "settling per event: {:?}, oscillation: {}",
        m.disturbance_settling_min, m.oscillation_flag
    );
    Ok(())
}

fn main() -> pgnmpc::Result<()> {
    run_example()
}
