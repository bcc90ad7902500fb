use nalgebra::DVector;

use super::{SolverConfig, SolverMode, TerminalPolicy};
use crate::model::{
    gradient_and_cost, rollout, DiscreteSystem, InputBox, InputSequence, OcpProblem, StageCost,
};
use crate::{Error, Result};

/// Window and growth factor of the divergence monitor.
const DIVERGENCE_WINDOW: usize = 10;
const DIVERGENCE_GROWTH: f64 = 10.0;

/// Euclidean projection onto the product of boxes: clamp row `k` into box `k`.
pub fn project(mu: &InputSequence, boxes: &[InputBox]) -> Result<InputSequence> {
    if boxes.len() != mu.horizon() {
        return Err(Error::shape(format!(
            "{} boxes for a horizon of {}",
            boxes.len(),
            mu.horizon()
        )));
    }
    let mut out = mu.clone();
    for (k, b) in boxes.iter().enumerate() {
        if b.dim() != mu.input_dim() {
            return Err(Error::shape(format!(
                "box {k} does not match the input dimension"
            )));
        }
        out.set_input(k, &b.clamp(&mu.input(k)));
    }
    Ok(out)
}

/// Shift the previous plan one step and append `κ(ξ_N)`, then project into
/// the (possibly changed) current boxes.
pub fn warm_start(
    previous: &InputSequence,
    terminal_state: &DVector<f64>,
    policy: &TerminalPolicy,
    boxes: &[InputBox],
) -> Result<InputSequence> {
    let n = previous.horizon();
    if n == 0 {
        return Err(Error::shape("previous plan is empty"));
    }
    let mut shifted = InputSequence::zeros(n, previous.input_dim());
    for k in 1..n {
        shifted.set_input(k - 1, &previous.input(k));
    }
    let tail = policy.apply(terminal_state, &previous.input(n - 1))?;
    if tail.len() != previous.input_dim() {
        return Err(Error::shape(
            "terminal policy returned the wrong input dimension",
        ));
    }
    shifted.set_input(n - 1, &tail);
    project(&shifted, boxes)
}

/// One step `μ⁺ = Π[μ − γ∇h(x, μ)]` plus the fixed-point residual `‖μ − μ⁺‖`
/// evaluated at the input sequence.
pub fn iterate_once<S: DiscreteSystem, C: StageCost>(
    problem: &OcpProblem<S, C>,
    x: &DVector<f64>,
    mu: &InputSequence,
    gamma: f64,
) -> Result<(InputSequence, f64)> {
    if !(gamma > 0.0) {
        return Err(Error::config(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    let update = pg_update(problem, x, mu, gamma)?;
    Ok((update.next, update.residual))
}

struct Update {
    next: InputSequence,
    residual: f64,
    cost: f64,
}

fn pg_update<S: DiscreteSystem, C: StageCost>(
    problem: &OcpProblem<S, C>,
    x: &DVector<f64>,
    mu: &InputSequence,
    gamma: f64,
) -> Result<Update> {
    let (grad, cost) = gradient_and_cost(problem, x, mu)?;
    let stepped = InputSequence::new(mu.values() - gamma * grad.values());
    let next = project(&stepped, problem.boxes())?;
    let residual = mu.distance(&next);
    Ok(Update {
        next,
        residual,
        cost,
    })
}

/// `√(1 − ε²)/σ · l(x, μ₀)`.
pub fn stop_threshold<C: StageCost>(
    x: &DVector<f64>,
    mu: &InputSequence,
    epsilon: f64,
    sigma: f64,
    cost: &C,
) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) || !(sigma > 0.0) {
        return Err(Error::domain(format!(
            "stopping threshold needs 0 < epsilon < 1 and sigma > 0 (got {epsilon}, {sigma})"
        )));
    }
    let stage = cost.evaluate(x, &mu.input(0));
    Ok((1.0 - epsilon * epsilon).sqrt() / sigma * stage)
}

/// Previous plan handed to [`solve_step`].
#[derive(Debug, Clone)]
pub struct WarmStart {
    pub sequence: InputSequence,
    /// `ξ_N` of `sequence` rolled out from the previous measured state.
    /// `None` means there is no previous solve: the sequence is used as the
    /// initial guess without shifting.
    pub terminal_state: Option<DVector<f64>>,
}

impl WarmStart {
    pub fn cold(sequence: InputSequence) -> Self {
        Self {
            sequence,
            terminal_state: None,
        }
    }
}

impl From<&SolveResult> for WarmStart {
    fn from(r: &SolveResult) -> Self {
        Self {
            sequence: r.sequence.clone(),
            terminal_state: Some(r.terminal_state.clone()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    /// `u_t = μ₀`.
    pub applied_input: DVector<f64>,
    pub sequence: InputSequence,
    pub iterations_used: usize,
    /// `‖μ − Π[μ − γ∇h(x, μ)]‖` at the returned sequence.
    pub final_residual: f64,
    /// `h(x, μ)` at the returned sequence.
    pub final_cost: f64,
    /// Stopping threshold at the returned sequence; stopping-criterion mode only.
    pub stop_threshold: Option<f64>,
    /// Whether the stopping criterion fired before the iteration cap;
    /// stopping-criterion mode only.
    pub criterion_met: Option<bool>,
    /// Iterations whose update increased the running cost.
    pub cost_increases: usize,
    /// `ξ_N` of the returned sequence rolled out from `x`.
    pub terminal_state: DVector<f64>,
}

#[derive(Default)]
struct DivergenceMonitor {
    costs: Vec<f64>,
    increases: usize,
}

impl DivergenceMonitor {
    fn record(&mut self, cost: f64, gamma: f64) -> Result<()> {
        if let Some(&prev) = self.costs.last() {
            if cost > prev {
                self.increases += 1;
            }
        }
        self.costs.push(cost);
        let n = self.costs.len();
        if n > DIVERGENCE_WINDOW {
            let window = &self.costs[n - DIVERGENCE_WINDOW - 1..];
            let rising = window.windows(2).all(|w| w[1] > w[0]);
            let from = window[0];
            if rising && cost > DIVERGENCE_GROWTH * from.abs() {
                return Err(Error::StepSize {
                    gamma,
                    iteration: n - 1,
                    from,
                    to: cost,
                });
            }
        }
        Ok(())
    }
}

/// One sampling instant of the real-time scheme: warm start, then projected
/// gradient iterations according to `config.mode`.
///
/// Exhausting `max_iterations` in stopping-criterion mode is not an error;
/// it is reported through [`SolveResult::criterion_met`].
pub fn solve_step<S: DiscreteSystem, C: StageCost>(
    problem: &OcpProblem<S, C>,
    x: &DVector<f64>,
    previous: &WarmStart,
    config: &SolverConfig,
) -> Result<SolveResult> {
    config.validate()?;
    if x.len() != problem.state_dim() {
        return Err(Error::shape(format!(
            "measured state has dimension {}, expected {}",
            x.len(),
            problem.state_dim()
        )));
    }
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::Divergence { step: 0 });
    }
    if previous.sequence.horizon() != problem.horizon()
        || previous.sequence.input_dim() != problem.input_dim()
    {
        return Err(Error::shape(
            "previous plan does not match the problem horizon",
        ));
    }

    let mut mu = match &previous.terminal_state {
        Some(terminal) => warm_start(
            &previous.sequence,
            terminal,
            &config.terminal_policy,
            problem.boxes(),
        )?,
        None => project(&previous.sequence, problem.boxes())?,
    };

    let gamma = config.gamma;
    let mut monitor = DivergenceMonitor::default();
    let mut iterations = 0;

    let (last, threshold, met) = match config.mode {
        SolverMode::FixedIterations { count } => {
            let mut update = pg_update(problem, x, &mu, gamma)?;
            monitor.record(update.cost, gamma)?;
            while iterations < count {
                mu = update.next;
                iterations += 1;
                update = pg_update(problem, x, &mu, gamma)?;
                monitor.record(update.cost, gamma)?;
            }
            (update, None, None)
        }
        SolverMode::StoppingCriterion {
            epsilon,
            sigma,
            max_iterations,
        } => loop {
            let update = pg_update(problem, x, &mu, gamma)?;
            monitor.record(update.cost, gamma)?;
            let threshold = stop_threshold(x, &mu, epsilon, sigma, problem.cost())?;
            // A zero threshold can only be met at exact stationarity.
            if update.residual < threshold || update.residual == 0.0 {
                break (update, Some(threshold), Some(true));
            }
            if iterations >= max_iterations {
                break (update, Some(threshold), Some(false));
            }
            mu = update.next;
            iterations += 1;
        },
    };

    let terminal_state = rollout(problem, x, &mu)?
        .pop()
        .expect("rollout returns N + 1 states");
    Ok(SolveResult {
        applied_input: mu.input(0),
        sequence: mu,
        iterations_used: iterations,
        final_residual: last.residual,
        final_cost: last.cost,
        stop_threshold: threshold,
        criterion_met: met,
        cost_increases: monitor.increases,
        terminal_state,
    })
}
