//! Sampling estimates of `L₂`, `m` and `σ`: exact on a quadratic problem,
//! and over the induction operating region of the anesthesia problem.
//!
//! ```text
//! cargo run --release -p pgnmpc --example constant_estimation
//! ```

use nalgebra::DVector;
use pgnmpc::pkpd::{patient_system, PatientFile, PatientModel};
use pgnmpc::sim::{controller_problem, Scenario};
use pgnmpc::solver::{estimate_constants, LqAnalysis, SampleRegion};
use pgnmpc::suite::random_lq_problem;

pub fn run_example() -> pgnmpc::Result<()> {
    let (lq_problem, _) = random_lq_problem(5, 2, 1, 5, 1.0)?;
    let lq = LqAnalysis::new(&lq_problem)?;
    let region = SampleRegion::new(
        DVector::from_element(2, -1.0),
        DVector::from_element(2, 1.0),
    )?;
    let est = estimate_constants(&lq_problem, &region, 200, 1)?;
    println!(
        "LQ: m = {:.4} (estimate {:.4}), L2 = {:.4} (estimate {:.4}), sigma estimate {:.4}, analytic bound {:.4}",
        lq.strong_convexity(),
        est.m,
        lq.smoothness(),
        est.l2,
        est.sigma,
        lq.sigma_bound(2f64.sqrt())?
    );

    let file = PatientFile::load(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/data/patient_nominal.json"
    ))?;
    let patient = PatientModel::from_file(&file, 0.1)?;
    let system = patient_system(&patient);
    let scenario = Scenario {
        horizon: 5,
        ..Scenario::default()
    };
    let problem = controller_problem(&system, &patient, &scenario, 0.0, 0.0)?;
    // States visited during the first minutes of the nominal induction.
    let upper = DVector::from_vec(vec![40.0, 30.0, 30.0, 2.5, 0.1, 0.1, 0.1, 0.1]);
    let region = SampleRegion::new(DVector::zeros(8), upper)?;
    match estimate_constants(&problem, &region, 200, 2) {
        Ok(e) => println!(
            "anesthesia: m_hat = {:.4e}, L2_hat = {:.4e}, sigma_hat = {:.4e}",
            e.m, e.l2, e.sigma
        ),
        Err(e) => println!("anesthesia: {e}"),
    }
    Ok(())
}

fn main() -> pgnmpc::Result<()> {
    run_example()
}
