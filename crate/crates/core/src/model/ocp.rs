use nalgebra::{DMatrix, DVector};

use super::{DiscreteSystem, InputSequence, OcpProblem, StageCost};
use crate::{Error, Result};

/// Predicted trajectory `ξ₀ = x, ξ_{k+1} = f(ξ_k, μ_k)`; returns `N + 1` states.
pub fn rollout<S: DiscreteSystem, C: StageCost>(
    problem: &OcpProblem<S, C>,
    x: &DVector<f64>,
    mu: &InputSequence,
) -> Result<Vec<DVector<f64>>> {
    problem.check_shapes(x, mu)?;
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::Divergence { step: 0 });
    }
    let system = problem.system();
    let mut traj = Vec::with_capacity(mu.horizon() + 1);
    traj.push(x.clone());
    for k in 0..mu.horizon() {
        let next = system.step(&traj[k], &mu.input(k));
        if next.len() != system.state_dim() {
            return Err(Error::shape(format!(
                "step returned a state of dimension {}, expected {}",
                next.len(),
                system.state_dim()
            )));
        }
        if !next.iter().all(|v| v.is_finite()) {
            return Err(Error::Divergence { step: k + 1 });
        }
        traj.push(next);
    }
    Ok(traj)
}

fn cost_along<S: DiscreteSystem, C: StageCost>(
    problem: &OcpProblem<S, C>,
    traj: &[DVector<f64>],
    mu: &InputSequence,
) -> Result<f64> {
    let cost = problem.cost();
    let n = mu.horizon();
    let total = (0..n)
        .map(|k| cost.evaluate(&traj[k], &mu.input(k)))
        .sum::<f64>()
        + cost.terminal_evaluate(&traj[n]);
    if !total.is_finite() {
        return Err(Error::Numerical("running cost is not finite".into()));
    }
    Ok(total)
}

/// `h(x, μ) = Σ_k l(ξ_k, μ_k) + V_f(ξ_N)`.
pub fn running_cost<S: DiscreteSystem, C: StageCost>(
    problem: &OcpProblem<S, C>,
    x: &DVector<f64>,
    mu: &InputSequence,
) -> Result<f64> {
    let traj = rollout(problem, x, mu)?;
    cost_along(problem, &traj, mu)
}

/// Exact `∇_μ h` from one forward rollout and one backward costate sweep.
pub fn gradient<S: DiscreteSystem, C: StageCost>(
    problem: &OcpProblem<S, C>,
    x: &DVector<f64>,
    mu: &InputSequence,
) -> Result<InputSequence> {
    gradient_and_cost(problem, x, mu).map(|(g, _)| g)
}

/// Gradient together with `h(x, μ)` from the same rollout.
pub fn gradient_and_cost<S: DiscreteSystem, C: StageCost>(
    problem: &OcpProblem<S, C>,
    x: &DVector<f64>,
    mu: &InputSequence,
) -> Result<(InputSequence, f64)> {
    let traj = rollout(problem, x, mu)?;
    let total = cost_along(problem, &traj, mu)?;
    let system = problem.system();
    let cost = problem.cost();
    let n = mu.horizon();

    let mut grad = DMatrix::zeros(n, mu.input_dim());
    // λ_N = ∇V_f(ξ_N); λ_k = ∇ₓl(ξ_k, μ_k) + A_kᵀ λ_{k+1}
    let mut lambda = cost.terminal_grad(&traj[n]);
    for k in (0..n).rev() {
        let u = mu.input(k);
        let (a_t_lambda, b_t_lambda) = system.adjoint(&traj[k], &u, &lambda);
        let g_k = cost.grad_u(&traj[k], &u) + b_t_lambda;
        grad.set_row(k, &g_k.transpose());
        lambda = cost.grad_x(&traj[k], &u) + a_t_lambda;
    }
    if !grad.iter().all(|v| v.is_finite()) {
        return Err(Error::Numerical("gradient is not finite".into()));
    }
    Ok((InputSequence::new(grad), total))
}

/// Central-difference approximation of `∇_μ h`. Verification only.
pub fn finite_difference_gradient<S: DiscreteSystem, C: StageCost>(
    problem: &OcpProblem<S, C>,
    x: &DVector<f64>,
    mu: &InputSequence,
    step_size: f64,
) -> Result<InputSequence> {
    if !(step_size > 0.0 && step_size.is_finite()) {
        return Err(Error::domain(format!(
            "finite-difference step must be positive, got {step_size}"
        )));
    }
    problem.check_shapes(x, mu)?;
    let mut grad = DMatrix::zeros(mu.horizon(), mu.input_dim());
    let mut probe = mu.values().clone();
    for k in 0..mu.horizon() {
        for j in 0..mu.input_dim() {
            let orig = probe[(k, j)];
            probe[(k, j)] = orig + step_size;
            let plus = running_cost(problem, x, &InputSequence::new(probe.clone()))?;
            probe[(k, j)] = orig - step_size;
            let minus = running_cost(problem, x, &InputSequence::new(probe.clone()))?;
            probe[(k, j)] = orig;
            grad[(k, j)] = (plus - minus) / (2.0 * step_size);
        }
    }
    Ok(InputSequence::new(grad))
}
