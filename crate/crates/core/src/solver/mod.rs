//! Real-time projected-gradient iteration with warm starting and the
//! stability stopping criterion.

mod config;
mod constants;
mod iteration;

pub use config::{SolverConfig, SolverMode, TerminalPolicy};
pub use constants::{
    epsilon_from_constants, estimate_constants, ConstantEstimates, LqAnalysis, SampleRegion,
};
pub use iteration::{
    iterate_once, project, solve_step, stop_threshold, warm_start, SolveResult, WarmStart,
};
