//! Closed-loop simulation of the controller against the patient model.

mod estimator;
mod metrics;
mod run;
mod scenario;
mod trace;

pub use estimator::{ExtendedKalmanFilter, StateEstimator};
pub use metrics::{
    compute_metrics, MetricsReport, BAND_HALF_WIDTH, OSCILLATION_THRESHOLD, SETTLE_HOLD_MIN,
};
pub use run::{
    controller_problem, horizon_boxes, run_scenario, uncertainty_sweep, ScenarioAbort,
    SweepOutcome, SWEEP_FACTOR_RANGE,
};
pub use scenario::{
    CostWeights, Disturbance, EstimatorConfig, InitialInputs, PlantPerturbation, Scenario,
};
pub use trace::{SimTrace, TraceRow};
