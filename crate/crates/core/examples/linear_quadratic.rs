//! A box-constrained linear-quadratic problem: rollout, running cost, the
//! adjoint gradient checked against finite differences, and the exact
//! optimum from the condensed QP.
//!
//! ```text
//! cargo run -p pgnmpc --example linear_quadratic
//! ```

use nalgebra::{DMatrix, DVector};
use pgnmpc::model::{
    finite_difference_gradient, gradient, rollout, running_cost, InputBox, InputSequence,
    LinearSystem, OcpProblem, QuadraticCost,
};
use pgnmpc::reference::{dare, flatten, CondensedLq};

pub fn run_example() -> pgnmpc::Result<()> {
    // Double integrator sampled at 0.1 s.
    let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
    let b = DMatrix::from_row_slice(2, 1, &[0.005, 0.1]);
    let q = DMatrix::identity(2, 2);
    let r = DMatrix::from_element(1, 1, 0.1);
    let (p, k) = dare(&a, &b, &q, &r)?;
    println!("terminal weight P =\n{p:.4}LQR gain K = {k:.4}");

    let problem = OcpProblem::with_uniform_box(
        LinearSystem::new(a, b)?,
        QuadraticCost::new(q, r, p)?,
        InputBox::from_slices(&[-1.0], &[1.0])?,
        10,
    )?;
    let x = DVector::from_vec(vec![1.0, -0.5]);
    let mu = InputSequence::constant(10, &DVector::from_element(1, 0.2));

    let states = rollout(&problem, &x, &mu)?;
    println!(
        "rollout: {} states, last {:?}",
        states.len(),
        states[10].as_slice()
    );
    println!("h(x, mu) = {:.6}", running_cost(&problem, &x, &mu)?);

    let g = flatten(&gradient(&problem, &x, &mu)?);
    let fd = flatten(&finite_difference_gradient(&problem, &x, &mu, 1e-5)?);
    println!(
        "adjoint vs central differences: relative gap {:.2e}",
        (&g - &fd).norm() / g.norm()
    );

    let condensed = CondensedLq::new(problem.system(), problem.cost(), problem.horizon());
    let (v, star) = condensed.solve(&x, problem.boxes())?;
    println!("V(x) = {v:.6}, optimal first input {:.4}", star.input(0)[0]);
    Ok(())
}

fn main() -> pgnmpc::Result<()> {
    run_example()
}
