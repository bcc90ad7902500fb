//! Output feedback: the controller sees only BIS corrupted by Gaussian noise
//! (std 2) and estimates the PK state with an extended Kalman filter.
//!
//! ```text
//! cargo run -p pgnmpc --example state_estimation
//! ```

use pgnmpc::pkpd::{PatientFile, PatientModel, EFFECT_P, EFFECT_R};
use pgnmpc::sim::{compute_metrics, run_scenario, Scenario};

pub fn run_example() -> pgnmpc::Result<()> {
    let file = PatientFile::load(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/data/patient_nominal.json"
    ))?;
    let scenario = Scenario::load(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/data/scenario_filtered.json"
    ))?;
    let patient = PatientModel::from_file(&file, scenario.ts_min)?;
    let trace = run_scenario(&patient, &scenario)?;

    let mut worst_p: f64 = 0.0;
    let mut worst_r: f64 = 0.0;
    for row in &trace.rows {
        worst_p = worst_p.max((row.plant_state[EFFECT_P] - row.estimated_state[EFFECT_P]).abs());
        worst_r = worst_r.max((row.plant_state[EFFECT_R] - row.estimated_state[EFFECT_R]).abs());
    }
    println!("largest effect-site estimation error: propofol {worst_p:.4} ug/ml, remifentanil {worst_r:.4} ng/ml");
    for row in trace.rows.iter().step_by(100) {
        println!(
            "t = {:4.1}  measured {:6.2}  true {:6.2}  Ce_p true {:.3} est {:.3}",
            row.time_min,
            row.measured_bis,
            row.true_bis,
            row.plant_state[EFFECT_P],
            row.estimated_state[EFFECT_P]
        );
    }
    let m = compute_metrics(&trace, &scenario)?;
    println!("time in band {:?} %", m.time_in_band_pct);
    Ok(())
}

fn main() -> pgnmpc::Result<()> {
    run_example()
}
