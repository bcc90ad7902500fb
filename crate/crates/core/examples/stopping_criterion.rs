//! The stability stopping criterion in closed loop on a linear-quadratic
//! plant. `σ` comes from the analytic LQ bound, `ε` from `m`, `L₂` and `γ`;
//! the exact value function decreases at every step.
//!
//! ```text
//! cargo run -p pgnmpc --example stopping_criterion
//! ```

use pgnmpc::suite::lyapunov_bench;

pub fn run_example() -> pgnmpc::Result<()> {
    let stats = lyapunov_bench(11, 5, 60)?;
    println!("sigma = {:.3e}, eps = {:.6}", stats.sigma, stats.epsilon);
    println!(
        "{} closed-loop steps, {} without value decrease (worst V(x+)/V(x) = {:.4})",
        stats.steps_checked, stats.decrease_violations, stats.worst_value_ratio
    );
    println!(
        "iterations per step up to {}, iteration cap reached {} times",
        stats.max_iterations_used, stats.criterion_misses
    );
    Ok(())
}

fn main() -> pgnmpc::Result<()> {
    run_example()
}
