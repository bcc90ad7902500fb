//! The controller keeps the nominal model while the simulated patient's C50
//! values are scaled by 0.7 … 1.3.
//!
//! ```text
//! cargo run -p pgnmpc --example model_uncertainty
//! ```

use pgnmpc::pkpd::{PatientFile, PatientModel};
use pgnmpc::sim::{uncertainty_sweep, Scenario};

pub fn run_example() -> pgnmpc::Result<()> {
    let file = PatientFile::load(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/data/patient_nominal.json"
    ))?;
    let patient = PatientModel::from_file(&file, 0.1)?;
    let scenario = Scenario::default();
    println!(
        "{:>6} {:>9} {:>12} {:>11} {:>13}",
        "factor", "rise_min", "min_BIS", "in_band_%", "terminal_err"
    );
    for o in uncertainty_sweep(&patient, &scenario, &[0.7, 0.9, 1.0, 1.1, 1.3])? {
        let m = &o.metrics;
        println!(
            "{:>6} {:>9.1} {:>12.2} {:>11.1} {:>13.4}",
            o.factor,
            m.rise_time_min.unwrap_or(f64::NAN),
            m.min_bis_induction.unwrap_or(f64::NAN),
            m.time_in_band_pct.unwrap_or(f64::NAN),
            m.terminal_error
        );
    }
    Ok(())
}

fn main() -> pgnmpc::Result<()> {
    run_example()
}
