//! The propofol/remifentanil patient: PK matrices, exact discretization, the
//! BIS interaction surface and the infusion ceilings.
//!
//! ```text
//! cargo run -p pgnmpc --example patient_model
//! ```

use nalgebra::DVector;
use pgnmpc::model::DiscreteSystem;
use pgnmpc::pkpd::{
    bis, bis_gradient, patient_system, InputBoundsSchedule, PatientFile, PatientModel,
};

pub fn run_example() -> pgnmpc::Result<()> {
    let file = PatientFile::load(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/data/patient_nominal.json"
    ))?;
    let model = PatientModel::from_file(&file, 0.1)?;
    println!(
        "Ac (propofol block):\n{:.4}",
        model.ac().view((0, 0), (4, 4))
    );
    println!(
        "Ad (propofol block, Ts = 0.1 min):\n{:.5}",
        model.ad().view((0, 0), (4, 4))
    );

    let pd = model.pd();
    for (ce_p, ce_r) in [(0.0, 0.0), (1.8, 0.0), (0.0, 12.5), (1.8, 12.5), (3.0, 2.0)] {
        let (dp, dr) = bis_gradient(ce_p, ce_r, pd)?;
        println!(
            "BIS({ce_p}, {ce_r}) = {:.3}, gradient ({dp:.3}, {dr:.3})",
            bis(ce_p, ce_r, pd)?
        );
    }

    // Two minutes of a 2 mg/kg/min propofol infusion, no remifentanil.
    let sys = patient_system(&model);
    let u = DVector::from_vec(vec![2.0 * file.weight_kg, 0.0]);
    let mut x = DVector::zeros(8);
    for _ in 0..20 {
        x = sys.step(&x, &u);
    }
    println!(
        "after 2 min: central {:.1} mg, effect site {:.3} ug/ml, BIS {:.1}; remifentanil states {:?}",
        x[0],
        x[3],
        sys.output(&x),
        &x.as_slice()[4..]
    );

    let schedule = InputBoundsSchedule::default();
    for t in [5.0, 10.0, 15.0] {
        let b = schedule.bounds_at(t, file.weight_kg);
        println!("t = {t} min: upper bounds {:?}", b.upper().as_slice());
    }
    Ok(())
}

fn main() -> pgnmpc::Result<()> {
    run_example()
}
