//! Projected-gradient iterations on a strongly convex QP: distance to the
//! exact minimizer shrinks at least by the factor `ε` from `m`, `L₂` and `γ`.
//!
//! ```text
//! cargo run -p pgnmpc --example projected_gradient
//! ```

use nalgebra::DVector;
use pgnmpc::model::InputSequence;
use pgnmpc::reference::{flatten, CondensedLq};
use pgnmpc::solver::{epsilon_from_constants, iterate_once, LqAnalysis};
use pgnmpc::suite::random_lq_problem;

pub fn run_example() -> pgnmpc::Result<()> {
    let (problem, _) = random_lq_problem(3, 3, 2, 5, 1.0)?;
    let lq = LqAnalysis::new(&problem)?;
    let (m, l2) = (lq.strong_convexity(), lq.smoothness());

    let x = DVector::from_vec(vec![3.0, -2.0, 1.5]);
    let condensed = CondensedLq::new(problem.system(), problem.cost(), problem.horizon());
    let (_, star) = condensed.solve(&x, problem.boxes())?;
    let star = flatten(&star);

    for gamma in [0.5 / l2, 1.0 / l2, 1.8 / l2] {
        let eps = epsilon_from_constants(gamma, m, l2)?;
        let mut mu = InputSequence::zeros(problem.horizon(), problem.input_dim());
        let mut worst: f64 = 0.0;
        let mut residual = f64::NAN;
        for _ in 0..200 {
            let e = (flatten(&mu) - &star).norm();
            let (next, r) = iterate_once(&problem, &x, &mu, gamma)?;
            if e > 1e-9 {
                worst = worst.max((flatten(&next) - &star).norm() / e);
            }
            residual = r;
            mu = next;
        }
        println!(
            "gamma = {:.3}/L2: eps = {eps:.5}, worst observed ratio = {worst:.5}, residual after 200 = {residual:.2e}",
            gamma * l2
        );
    }
    Ok(())
}

fn main() -> pgnmpc::Result<()> {
    run_example()
}
