//! Discrete-time optimal control problems and their derivatives.

mod cost;
mod ocp;
mod problem;
mod system;

pub use cost::{QuadraticCost, StageCost};
pub use ocp::{finite_difference_gradient, gradient, gradient_and_cost, rollout, running_cost};
pub use problem::{InputBox, InputSequence, OcpProblem};
pub use system::{DiscreteSystem, LinearSystem};
