use std::fmt;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{
    compute_metrics, EstimatorConfig, MetricsReport, Scenario, SimTrace, StateEstimator, TraceRow,
};
use crate::model::{DiscreteSystem, InputBox, InputSequence, OcpProblem, StageCost};
use crate::pkpd::{
    patient_system, AnesthesiaCost, PatientModel, PatientSystem, INPUT_DIM, STATE_DIM,
};
use crate::solver::{solve_step, WarmStart};
use crate::{Error, Result};

/// A run stopped by an error, with everything recorded before it.
#[derive(Debug)]
pub struct ScenarioAbort {
    pub error: Error,
    pub partial: SimTrace,
}

impl fmt::Display for ScenarioAbort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (after {} recorded steps)",
            self.error,
            self.partial.len()
        )
    }
}

impl std::error::Error for ScenarioAbort {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

impl From<ScenarioAbort> for Error {
    fn from(a: ScenarioAbort) -> Self {
        a.error
    }
}

/// Input boxes over the horizon starting at `t_min`: box `k` uses the
/// schedule at `t_min + k·ts`, so the plan anticipates the switch from
/// induction to maintenance ceilings.
pub fn horizon_boxes(patient: &PatientModel, scenario: &Scenario, t_min: f64) -> Vec<InputBox> {
    (0..scenario.horizon)
        .map(|k| {
            scenario
                .bounds
                .bounds_at(t_min + k as f64 * scenario.ts_min, patient.weight_kg())
        })
        .collect()
}

/// The controller's optimal control problem at time `t_min`.
pub fn controller_problem<'a>(
    system: &'a PatientSystem,
    patient: &PatientModel,
    scenario: &Scenario,
    t_min: f64,
    output_offset: f64,
) -> Result<OcpProblem<&'a PatientSystem, AnesthesiaCost>> {
    let cost = AnesthesiaCost::new(
        scenario.cost_weights.r_matrix(),
        scenario.cost_weights.rho,
        scenario.bis_ref,
        *patient.pd(),
    )?
    .with_output_offset(output_offset);
    OcpProblem::new(system, cost, horizon_boxes(patient, scenario, t_min))
}

fn at_sampling_time(patient: &PatientModel, ts_min: f64) -> Result<PatientModel> {
    if patient.ts_min() == ts_min {
        Ok(patient.clone())
    } else {
        PatientModel::from_file(&patient.to_file(), ts_min)
    }
}

/// Closed-loop simulation of the real-time controller against `patient`.
///
/// Each sample: measure BIS (plus active disturbance and, with the filtered
/// estimator, Gaussian sensor noise), update the state estimate, solve, apply
/// `μ₀` to the plant. The plant carries `scenario.plant_perturbation`; the
/// controller predicts with `patient` as given.
///
/// With full-state feedback the controller also sees the gap between the
/// measured BIS and its own model's BIS as a constant output offset over the
/// horizon, which removes steady-state error under disturbances and model
/// mismatch.
///
/// The trace has `duration/ts + 1` rows, or none for a zero duration.
pub fn run_scenario(
    patient: &PatientModel,
    scenario: &Scenario,
) -> Result<SimTrace, ScenarioAbort> {
    let abort = |error: Error, partial: SimTrace| ScenarioAbort { error, partial };
    let empty = || SimTrace::new(scenario.ts_min, patient.pd().e0);

    if let Err(e) = scenario.validate() {
        return Err(abort(e, empty()));
    }
    let setup = at_sampling_time(patient, scenario.ts_min).and_then(|nominal| {
        let p = scenario.plant_perturbation;
        let plant = nominal.perturbed(p.c50p_scale, p.c50r_scale, p.pk_rate_scale)?;
        Ok((nominal, plant))
    });
    let (nominal, plant) = match setup {
        Ok(v) => v,
        Err(e) => return Err(abort(e, empty())),
    };

    // The input block of the Hessian is at least R, so L₂ ≥ λmax(R).
    let r_max = scenario
        .cost_weights
        .r_matrix()
        .symmetric_eigenvalues()
        .max();
    if scenario.controller.gamma * r_max >= 2.0 {
        log::warn!(
            "step size {} is at least 2/lambda_max(R) = {}; projected gradient will not descend",
            scenario.controller.gamma,
            2.0 / r_max
        );
    }

    let mut trace = SimTrace::new(scenario.ts_min, plant.pd().e0);
    if scenario.duration_min == 0.0 {
        return Ok(trace);
    }

    let controller_sys = patient_system(&nominal);
    let plant_sys = patient_system(&plant);
    let mut estimator = StateEstimator::new(&scenario.estimator, &nominal);
    let noise = match scenario.estimator {
        EstimatorConfig::Filtered { noise_std, .. } if noise_std > 0.0 => {
            Some(Normal::new(0.0, noise_std).expect("validated noise_std"))
        }
        _ => None,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);

    let u0 = DVector::from_vec(vec![
        scenario.initial_inputs.propofol,
        scenario.initial_inputs.remifentanil,
    ]);
    let mut warm = WarmStart::cold(InputSequence::constant(scenario.horizon, &u0));
    let mut x = DVector::zeros(STATE_DIM);
    let mut last_input: Option<DVector<f64>> = None;

    let steps = scenario.steps();
    for i in 0..=steps {
        let t = i as f64 * scenario.ts_min;
        let true_bis = plant.output(&x);
        let offset = scenario.disturbance_at(t);
        let sensor_noise = noise.map_or(0.0, |n| n.sample(&mut rng));
        let measured_bis = true_bis + offset + sensor_noise;

        let x_hat = estimator.update(last_input.as_ref(), measured_bis, &x);
        let model_offset = match estimator {
            StateEstimator::FullState => measured_bis - nominal.output(&x_hat),
            StateEstimator::Filtered(_) => 0.0,
        };

        let problem = match controller_problem(&controller_sys, &nominal, scenario, t, model_offset)
        {
            Ok(p) => p,
            Err(e) => return Err(abort(e, trace)),
        };
        let result = match solve_step(&problem, &x_hat, &warm, &scenario.controller) {
            Ok(r) => r,
            Err(e) => return Err(abort(e, trace)),
        };
        let u = problem.boxes()[0].clamp(&result.applied_input);
        let stage_cost = problem.cost().evaluate(&x_hat, &u);

        trace.rows.push(TraceRow {
            time_min: t,
            plant_state: to_array(&x),
            estimated_state: to_array(&x_hat),
            applied_input: [u[0], u[1]],
            measured_bis,
            true_bis,
            disturbance_offset: offset,
            solver_iterations: result.iterations_used,
            solver_residual: result.final_residual,
            stop_criterion_met: result.criterion_met,
            stage_cost,
        });
        if result.criterion_met == Some(false) {
            log::debug!("t = {t:.2} min: stopping criterion not met within the iteration cap");
        }

        if i < steps {
            x = plant_sys.step(&x, &u);
            warm = WarmStart::from(&result);
            last_input = Some(u);
        }
    }
    debug_assert_eq!(trace.rows[0].applied_input.len(), INPUT_DIM);
    Ok(trace)
}

fn to_array(v: &DVector<f64>) -> [f64; STATE_DIM] {
    let mut a = [0.0; STATE_DIM];
    a.copy_from_slice(v.as_slice());
    a
}

/// Result of one member of an [`uncertainty_sweep`].
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub factor: f64,
    pub metrics: MetricsReport,
    pub trace: SimTrace,
}

/// Accepted range for sweep factors.
pub const SWEEP_FACTOR_RANGE: (f64, f64) = (0.5, 1.5);

/// Runs the scenario once per factor with the simulated patient's `c50p` and
/// `c50r` multiplied by that factor. Runs execute in parallel; results come
/// back in the order of `factors`.
pub fn uncertainty_sweep(
    patient: &PatientModel,
    scenario: &Scenario,
    factors: &[f64],
) -> Result<Vec<SweepOutcome>> {
    let (lo, hi) = SWEEP_FACTOR_RANGE;
    if let Some(f) = factors.iter().find(|f| !(**f >= lo && **f <= hi)) {
        return Err(Error::config(format!(
            "uncertainty factor {f} outside the accepted range [{lo}, {hi}]"
        )));
    }
    std::thread::scope(|s| {
        let handles: Vec<_> = factors
            .iter()
            .map(|&factor| {
                s.spawn(move || -> Result<SweepOutcome> {
                    let mut sc = scenario.clone();
                    sc.plant_perturbation.c50p_scale *= factor;
                    sc.plant_perturbation.c50r_scale *= factor;
                    let trace = run_scenario(patient, &sc)?;
                    let metrics = compute_metrics(&trace, &sc)?;
                    Ok(SweepOutcome {
                        factor,
                        metrics,
                        trace,
                    })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    })
}
