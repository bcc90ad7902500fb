use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// How many projected-gradient iterations to run per sampling instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SolverMode {
    /// Exactly `count` iterations.
    FixedIterations { count: usize },
    /// Iterate until the residual drops below `√(1−ε²)/σ · l(x, μ₀)`,
    /// at most `max_iterations` times.
    StoppingCriterion {
        epsilon: f64,
        sigma: f64,
        max_iterations: usize,
    },
}

/// The local controller `κ` that fills the last slot of a shifted plan.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TerminalPolicy {
    /// Repeat the last input of the previous plan.
    #[default]
    HoldLast,
    Zero,
    /// `κ(ξ) = −K ξ`, with `gain` given row by row.
    Linear {
        gain: Vec<Vec<f64>>,
    },
}

impl TerminalPolicy {
    pub fn apply(
        &self,
        terminal_state: &DVector<f64>,
        last_input: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        match self {
            TerminalPolicy::HoldLast => Ok(last_input.clone()),
            TerminalPolicy::Zero => Ok(DVector::zeros(last_input.len())),
            TerminalPolicy::Linear { gain } => {
                let rows = gain.len();
                let cols = gain.first().map_or(0, Vec::len);
                if rows != last_input.len()
                    || cols != terminal_state.len()
                    || gain.iter().any(|r| r.len() != cols)
                {
                    return Err(Error::shape(format!(
                        "terminal gain must be {}x{}",
                        last_input.len(),
                        terminal_state.len()
                    )));
                }
                let k = DMatrix::from_fn(rows, cols, |i, j| gain[i][j]);
                Ok(-(k * terminal_state))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub gamma: f64,
    pub mode: SolverMode,
    #[serde(default)]
    pub terminal_policy: TerminalPolicy,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            gamma: 1e-3,
            mode: SolverMode::FixedIterations { count: 50 },
            terminal_policy: TerminalPolicy::HoldLast,
        }
    }
}

impl SolverConfig {
    pub fn fixed(gamma: f64, count: usize) -> Self {
        Self {
            gamma,
            mode: SolverMode::FixedIterations { count },
            terminal_policy: TerminalPolicy::HoldLast,
        }
    }

    pub fn stopping(gamma: f64, epsilon: f64, sigma: f64, max_iterations: usize) -> Self {
        Self {
            gamma,
            mode: SolverMode::StoppingCriterion {
                epsilon,
                sigma,
                max_iterations,
            },
            terminal_policy: TerminalPolicy::HoldLast,
        }
    }

    pub fn with_terminal_policy(mut self, policy: TerminalPolicy) -> Self {
        self.terminal_policy = policy;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::config(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        match self.mode {
            SolverMode::FixedIterations { count: 0 } => {
                Err(Error::config("fixed iteration count must be at least 1"))
            }
            SolverMode::StoppingCriterion {
                epsilon,
                sigma,
                max_iterations,
            } => {
                if !(epsilon > 0.0 && epsilon < 1.0) {
                    return Err(Error::config(format!(
                        "epsilon must lie in (0, 1), got {epsilon}"
                    )));
                }
                if !(sigma > 0.0 && sigma.is_finite()) {
                    return Err(Error::config(format!(
                        "sigma must be positive, got {sigma}"
                    )));
                }
                if max_iterations == 0 {
                    return Err(Error::config("max_iterations must be at least 1"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}
