//! The acceptance battery A1–A11.
//!
//! Each criterion is a function returning a [`CriterionResult`] with the
//! measured values and the pinned threshold. Closed-loop criteria take the
//! outcome of a shared run so [`run_suite`] simulates each scenario once.

use std::fmt;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::model::{
    finite_difference_gradient, gradient, InputBox, InputSequence, LinearSystem, OcpProblem,
    QuadraticCost, StageCost,
};
use crate::pkpd::{bis, patient_system, PatientModel, PdParams, STATE_DIM};
use crate::reference::{dare, euler_zoh, flatten, rk4_zoh, CondensedLq};
use crate::sim::{
    compute_metrics, controller_problem, run_scenario, uncertainty_sweep, Disturbance,
    MetricsReport, Scenario, SimTrace,
};
use crate::solver::{
    epsilon_from_constants, iterate_once, solve_step, LqAnalysis, SolverConfig, SolverMode,
    TerminalPolicy, WarmStart,
};
use crate::{Error, Result};

pub const RISE_TIME_MAX_MIN: f64 = 4.0;
pub const NOMINAL_RUNTIME_MAX: Duration = Duration::from_secs(5);
pub const OVERSHOOT_MAX_PCT: f64 = 15.0;
pub const TIME_IN_BAND_MIN_PCT: f64 = 85.0;
pub const SETTLING_MAX_MIN: f64 = 2.0;
pub const ITERATION_COUNTS: [usize; 3] = [10, 50, 1000];
pub const ITERATION_RUN_MIN: f64 = 30.0;
/// Slack on the non-increasing terminal-error trend.
pub const MONOTONE_SLACK: f64 = 1e-9;
pub const UNCERTAINTY_FACTORS: [f64; 4] = [0.7, 0.9, 1.1, 1.3];
pub const CONTRACTION_TOL: f64 = 1e-9;
pub const CONTRACTION_STARTS: usize = 100;
pub const GRADIENT_REL_TOL: f64 = 1e-6;
pub const GRADIENT_FD_STEP: f64 = 1e-5;
pub const GRADIENT_POINTS: usize = 100;
pub const ZOH_REL_TOL: f64 = 1e-6;
pub const ZOH_SUBSTEPS: usize = 10_000;
pub const BIS_HALF_EFFECT_TOL: f64 = 1e-12;
/// Closed-loop scenarios are stretched to at least this long.
pub const MIN_CLOSED_LOOP_MIN: f64 = 60.0;

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: &'static str,
    pub title: &'static str,
    pub passed: bool,
    /// Measured values.
    pub measured: String,
    /// The pinned acceptance threshold.
    pub threshold: String,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(
            f,
            "[{tag}] {} {}: {} (required: {})",
            self.id, self.title, self.measured, self.threshold
        )
    }
}

impl CriterionResult {
    fn new(
        id: &'static str,
        title: &'static str,
        passed: bool,
        measured: String,
        threshold: String,
    ) -> Self {
        Self {
            id,
            title,
            passed,
            measured,
            threshold,
        }
    }

    fn errored(id: &'static str, title: &'static str, error: &Error, threshold: String) -> Self {
        Self::new(id, title, false, format!("error: {error}"), threshold)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub passed: bool,
    pub criteria: Vec<CriterionResult>,
}

impl SuiteReport {
    pub fn new(criteria: Vec<CriterionResult>) -> Self {
        Self {
            passed: criteria.iter().all(|c| c.passed),
            criteria,
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &CriterionResult> {
        self.criteria.iter().filter(|c| !c.passed)
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.criteria {
            writeln!(f, "{c}")?;
        }
        let n = self.criteria.len();
        let ok = self.criteria.iter().filter(|c| c.passed).count();
        write!(f, "{ok}/{n} criteria passed")
    }
}

/// A finished closed-loop run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub scenario: Scenario,
    pub trace: SimTrace,
    pub metrics: MetricsReport,
    pub elapsed: Duration,
}

pub fn execute(patient: &PatientModel, scenario: &Scenario) -> Result<RunOutcome> {
    let start = Instant::now();
    let trace = run_scenario(patient, scenario)?;
    let elapsed = start.elapsed();
    let metrics = compute_metrics(&trace, scenario)?;
    Ok(RunOutcome {
        scenario: scenario.clone(),
        trace,
        metrics,
        elapsed,
    })
}

/// `base` without disturbances, at least an hour long.
pub fn nominal_scenario(base: &Scenario) -> Scenario {
    let mut s = base.clone();
    s.disturbances.clear();
    s.duration_min = s.duration_min.max(MIN_CLOSED_LOOP_MIN);
    s
}

/// `base` with its disturbances (the default profile if it has none), at
/// least an hour long.
pub fn disturbance_scenario(base: &Scenario) -> Scenario {
    let mut s = base.clone();
    if s.disturbances.is_empty() {
        s.disturbances = Disturbance::default_profile();
    }
    s.duration_min = s.duration_min.max(MIN_CLOSED_LOOP_MIN);
    s
}

fn fmt_opt(v: Option<f64>, unit: &str) -> String {
    v.map_or("not reached".to_string(), |x| format!("{x:.2}{unit}"))
}

pub fn a1_rise_time(nominal: &Result<RunOutcome>) -> CriterionResult {
    let (id, title) = ("A1", "induction rise time");
    let threshold = format!(
        "rise time <= {RISE_TIME_MAX_MIN} min, simulation < {} s",
        NOMINAL_RUNTIME_MAX.as_secs()
    );
    match nominal {
        Err(e) => CriterionResult::errored(id, title, e, threshold),
        Ok(run) => {
            let rise = run.metrics.rise_time_min;
            let passed =
                rise.is_some_and(|r| r <= RISE_TIME_MAX_MIN) && run.elapsed < NOMINAL_RUNTIME_MAX;
            let measured = format!(
                "rise time {}, simulation {:.2} s",
                fmt_opt(rise, " min"),
                run.elapsed.as_secs_f64()
            );
            CriterionResult::new(id, title, passed, measured, threshold)
        }
    }
}

pub fn a2_overshoot(nominal: &Result<RunOutcome>) -> CriterionResult {
    let (id, title) = ("A2", "induction overshoot");
    let threshold = format!("overshoot <= {OVERSHOOT_MAX_PCT}%");
    match nominal {
        Err(e) => CriterionResult::errored(id, title, e, threshold),
        Ok(run) => {
            let m = &run.metrics;
            let passed = m.overshoot_pct <= OVERSHOOT_MAX_PCT;
            let measured = format!(
                "overshoot {:.2}%, minimum BIS during induction {}",
                m.overshoot_pct,
                fmt_opt(m.min_bis_induction, "")
            );
            CriterionResult::new(id, title, passed, measured, threshold)
        }
    }
}

/// Checked on both the undisturbed and the disturbed run.
pub fn a3_maintenance(
    nominal: &Result<RunOutcome>,
    disturbed: &Result<RunOutcome>,
) -> CriterionResult {
    let (id, title) = ("A3", "maintenance time in band");
    let threshold = format!("time in band >= {TIME_IN_BAND_MIN_PCT}% on both runs");
    let (n, d) = match (nominal, disturbed) {
        (Err(e), _) | (_, Err(e)) => return CriterionResult::errored(id, title, e, threshold),
        (Ok(n), Ok(d)) => (n, d),
    };
    let ok = |r: &RunOutcome| {
        r.metrics
            .time_in_band_pct
            .is_some_and(|p| p >= TIME_IN_BAND_MIN_PCT)
    };
    let measured = format!(
        "undisturbed {} over {} min, disturbed {} over {} min",
        fmt_opt(n.metrics.time_in_band_pct, "%"),
        n.scenario.duration_min,
        fmt_opt(d.metrics.time_in_band_pct, "%"),
        d.scenario.duration_min
    );
    CriterionResult::new(id, title, ok(n) && ok(d), measured, threshold)
}

pub fn a4_disturbance(disturbed: &Result<RunOutcome>) -> CriterionResult {
    let (id, title) = ("A4", "output disturbance rejection");
    let threshold = format!("settling <= {SETTLING_MAX_MIN} min after every event, no oscillation");
    match disturbed {
        Err(e) => CriterionResult::errored(id, title, e, threshold),
        Ok(run) => {
            let m = &run.metrics;
            let settled = !m.disturbance_settling_min.is_empty()
                && m.disturbance_settling_min
                    .iter()
                    .all(|s| s.is_some_and(|v| v <= SETTLING_MAX_MIN));
            let events: Vec<String> = run
                .scenario
                .disturbances
                .iter()
                .zip(&m.disturbance_settling_min)
                .map(|(d, s)| {
                    format!(
                        "{:+} at {} min: {}",
                        d.bis_offset,
                        d.start_min,
                        fmt_opt(*s, " min")
                    )
                })
                .collect();
            let measured = format!(
                "settling [{}], oscillation {}",
                events.join("; "),
                m.oscillation_flag
            );
            CriterionResult::new(
                id,
                title,
                settled && !m.oscillation_flag,
                measured,
                threshold,
            )
        }
    }
}

/// Terminal `|BIS − ref|` after 30 min for each count in
/// [`ITERATION_COUNTS`].
pub fn iteration_comparison(
    patient: &PatientModel,
    base: &Scenario,
) -> Result<Vec<(usize, RunOutcome)>> {
    let mut s = base.clone();
    s.disturbances.clear();
    s.duration_min = ITERATION_RUN_MIN;
    std::thread::scope(|scope| {
        let handles: Vec<_> = ITERATION_COUNTS
            .iter()
            .map(|&count| {
                let mut sc = s.clone();
                sc.controller.mode = SolverMode::FixedIterations { count };
                scope.spawn(move || execute(patient, &sc).map(|r| (count, r)))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("comparison worker panicked"))
            .collect()
    })
}

pub fn a5_iterations(comparison: &Result<Vec<(usize, RunOutcome)>>) -> CriterionResult {
    let (id, title) = ("A5", "terminal error vs iteration count");
    let threshold = format!(
        "terminal |BIS - ref| at {ITERATION_RUN_MIN} min non-increasing over counts {ITERATION_COUNTS:?}"
    );
    match comparison {
        Err(e) => CriterionResult::errored(id, title, e, threshold),
        Ok(runs) => {
            let errors: Vec<f64> = runs.iter().map(|(_, r)| r.metrics.terminal_error).collect();
            let passed = errors.windows(2).all(|w| w[1] <= w[0] + MONOTONE_SLACK);
            let measured = runs
                .iter()
                .map(|(c, r)| format!("{c}: {:.4}", r.metrics.terminal_error))
                .collect::<Vec<_>>()
                .join(", ");
            CriterionResult::new(id, title, passed, measured, threshold)
        }
    }
}

/// A run reaches the band when BIS first enters it and holds it when every
/// maintenance-phase sample outside disturbance windows stays inside.
pub fn a6_uncertainty(patient: &PatientModel, base: &Scenario) -> CriterionResult {
    let (id, title) = ("A6", "robustness to PD mismatch");
    let threshold = format!(
        "for C50 factors {UNCERTAINTY_FACTORS:?}: band entered and 100% of maintenance samples in band"
    );
    let scenario = nominal_scenario(base);
    match uncertainty_sweep(patient, &scenario, &UNCERTAINTY_FACTORS) {
        Err(e) => CriterionResult::errored(id, title, &e, threshold),
        Ok(outcomes) => {
            let mut passed = true;
            let parts: Vec<String> = outcomes
                .iter()
                .map(|o| {
                    let m = &o.metrics;
                    let ok = m.rise_time_min.is_some() && m.time_in_band_pct == Some(100.0);
                    passed &= ok;
                    format!(
                        "{}: rise {}, in band {}, induction min BIS {}",
                        o.factor,
                        fmt_opt(m.rise_time_min, " min"),
                        fmt_opt(m.time_in_band_pct, "%"),
                        fmt_opt(m.min_bis_induction, "")
                    )
                })
                .collect();
            CriterionResult::new(id, title, passed, parts.join("; "), threshold)
        }
    }
}

/// Box-constrained linear-quadratic test problem with random dynamics.
///
/// Returns the problem with `P` from the Riccati equation, and the
/// stabilizing gain `K` (`u = −Kx`).
pub fn random_lq_problem(
    seed: u64,
    state_dim: usize,
    input_dim: usize,
    horizon: usize,
    input_bound: f64,
) -> Result<(OcpProblem<LinearSystem, QuadraticCost>, DMatrix<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(state_dim, state_dim, |_, _| rng.random_range(-0.6..0.6));
    let b = DMatrix::from_fn(state_dim, input_dim, |_, _| rng.random_range(-1.0..1.0));
    let q = DMatrix::identity(state_dim, state_dim);
    let r = DMatrix::identity(input_dim, input_dim) * 0.5;
    let (p, k) = dare(&a, &b, &q, &r)?;
    let system = LinearSystem::new(a, b)?;
    let cost = QuadraticCost::new(q, r, p)?;
    let bound = InputBox::new(
        DVector::from_element(input_dim, -input_bound),
        DVector::from_element(input_dim, input_bound),
    )?;
    Ok((
        OcpProblem::with_uniform_box(system, cost, bound, horizon)?,
        k,
    ))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ContractionStats {
    pub epsilon: f64,
    pub gamma: f64,
    pub m: f64,
    pub l2: f64,
    pub iterations_checked: usize,
    /// Largest `‖μ^{i+1} − μ*‖ / ‖μ^i − μ*‖`.
    pub worst_ratio: f64,
    /// Smallest `‖μ^i − μ^{i+1}‖ / ‖μ^i − μ*‖`, to compare with `√(1 − ε²)`.
    pub worst_residual_ratio: f64,
}

/// Projected gradient at step `gamma` on [`random_lq_problem`] from
/// `starts` random states and initial sequences, against the exact box-QP
/// minimizer.
pub fn contraction_bench(
    seed: u64,
    starts: usize,
    gamma_times_l2: f64,
) -> Result<ContractionStats> {
    let (problem, _) = random_lq_problem(seed, 3, 2, 5, 1.0)?;
    let lq = LqAnalysis::new(&problem)?;
    let (m, l2) = (lq.strong_convexity(), lq.smoothness());
    let gamma = gamma_times_l2 / l2;
    let epsilon = epsilon_from_constants(gamma, m, l2)?;
    let condensed = CondensedLq::new(problem.system(), problem.cost(), problem.horizon());
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);

    let mut stats = ContractionStats {
        epsilon,
        gamma,
        m,
        l2,
        iterations_checked: 0,
        worst_ratio: 0.0,
        worst_residual_ratio: f64::INFINITY,
    };
    for _ in 0..starts {
        let x = DVector::from_fn(problem.state_dim(), |_, _| rng.random_range(-4.0..4.0));
        let (_, star) = condensed.solve(&x, problem.boxes())?;
        let star = flatten(&star);
        let floor = 1e-6 * (1.0 + star.norm());
        let mut mu = InputSequence::new(DMatrix::from_fn(
            problem.horizon(),
            problem.input_dim(),
            |_, _| rng.random_range(-1.0..1.0),
        ));
        for _ in 0..10_000 {
            let e = (flatten(&mu) - &star).norm();
            if e <= floor {
                break;
            }
            let (next, residual) = iterate_once(&problem, &x, &mu, gamma)?;
            let e_next = (flatten(&next) - &star).norm();
            stats.iterations_checked += 1;
            stats.worst_ratio = stats.worst_ratio.max(e_next / e);
            stats.worst_residual_ratio = stats.worst_residual_ratio.min(residual / e);
            mu = next;
        }
    }
    Ok(stats)
}

/// Step size used by [`a7_contraction`], as a multiple of `1/L₂`.
pub const CONTRACTION_GAMMA_TIMES_L2: f64 = 1.0;

pub fn a7_contraction(seed: u64) -> CriterionResult {
    let (id, title) = ("A7", "projected-gradient contraction");
    let threshold = format!(
        "ratio <= eps + {CONTRACTION_TOL:e} and residual ratio >= sqrt(1 - eps^2) - {CONTRACTION_TOL:e} \
         over {CONTRACTION_STARTS} starts"
    );
    match contraction_bench(seed, CONTRACTION_STARTS, CONTRACTION_GAMMA_TIMES_L2) {
        Err(e) => CriterionResult::errored(id, title, &e, threshold),
        Ok(s) => {
            let floor = (1.0 - s.epsilon * s.epsilon).sqrt();
            let passed = s.iterations_checked > 0
                && s.worst_ratio <= s.epsilon + CONTRACTION_TOL
                && s.worst_residual_ratio >= floor - CONTRACTION_TOL;
            let measured = format!(
                "eps {:.6} (m {:.4}, L2 {:.4}, gamma 1/L2), worst ratio {:.6}, \
                 worst residual ratio {:.6} vs {:.6}, {} iterations",
                s.epsilon,
                s.m,
                s.l2,
                s.worst_ratio,
                s.worst_residual_ratio,
                floor,
                s.iterations_checked
            );
            CriterionResult::new(id, title, passed, measured, threshold)
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LyapunovStats {
    pub sigma: f64,
    pub epsilon: f64,
    pub steps_checked: usize,
    pub decrease_violations: usize,
    /// Largest `V(x⁺)/V(x)` over checked steps.
    pub worst_value_ratio: f64,
    /// Steps where `σ‖u − u*‖ < l(x, u)` failed.
    pub suboptimality_violations: usize,
    pub criterion_misses: usize,
    pub max_iterations_used: usize,
}

/// Closed loop of the stopping-criterion controller on a two-state LQ
/// problem, tracking the exact value function along the way.
pub fn lyapunov_bench(seed: u64, starts: usize, steps: usize) -> Result<LyapunovStats> {
    let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
    let b = DMatrix::from_row_slice(2, 1, &[0.005, 0.1]);
    let q = DMatrix::identity(2, 2);
    let r = DMatrix::from_element(1, 1, 0.1);
    let (p, k) = dare(&a, &b, &q, &r)?;
    let system = LinearSystem::new(a, b)?;
    let cost = QuadraticCost::new(q.clone(), r, p)?;
    let problem =
        OcpProblem::with_uniform_box(system, cost, InputBox::from_slices(&[-1.0], &[1.0])?, 10)?;
    let lq = LqAnalysis::new(&problem)?;
    let q_min = q.symmetric_eigenvalues().min();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let initial: Vec<DVector<f64>> = (0..starts)
        .map(|_| DVector::from_fn(2, |_, _| rng.random_range(-1.0..1.0)))
        .collect();
    let mut v_max: f64 = 0.0;
    for x in &initial {
        v_max = v_max.max(lq.value(x)?.0);
    }
    let radius = (v_max / q_min).sqrt();
    let sigma = lq.sigma_bound(radius)?;
    let gamma = 1.0 / lq.smoothness();
    let epsilon = epsilon_from_constants(gamma, lq.strong_convexity(), lq.smoothness())?;
    let gain: Vec<Vec<f64>> = k
        .row_iter()
        .map(|row| row.iter().copied().collect())
        .collect();
    let config = SolverConfig::stopping(gamma, epsilon, sigma, 1_000_000)
        .with_terminal_policy(TerminalPolicy::Linear { gain });

    let mut stats = LyapunovStats {
        sigma,
        epsilon,
        steps_checked: 0,
        decrease_violations: 0,
        worst_value_ratio: 0.0,
        suboptimality_violations: 0,
        criterion_misses: 0,
        max_iterations_used: 0,
    };
    for x0 in initial {
        let mut x = x0;
        let mut warm =
            WarmStart::cold(InputSequence::zeros(problem.horizon(), problem.input_dim()));
        for _ in 0..steps {
            if x.norm() <= 1e-6 {
                break;
            }
            let result = solve_step(&problem, &x, &warm, &config)?;
            stats.max_iterations_used = stats.max_iterations_used.max(result.iterations_used);
            if result.criterion_met == Some(false) {
                stats.criterion_misses += 1;
            }
            let u = result.applied_input.clone();
            let (v, star) = lq.value(&x)?;
            let stage = problem.cost().evaluate(&x, &u);
            if !(sigma * (&u - star.input(0)).norm() < stage) && stage > 0.0 {
                stats.suboptimality_violations += 1;
            }
            let next = problem.system().a() * &x + problem.system().b() * &u;
            let (v_next, _) = lq.value(&next)?;
            stats.steps_checked += 1;
            stats.worst_value_ratio = stats.worst_value_ratio.max(v_next / v);
            if !(v_next < v) {
                stats.decrease_violations += 1;
            }
            x = next;
            warm = WarmStart::from(&result);
        }
    }
    Ok(stats)
}

pub fn a8_lyapunov(seed: u64) -> CriterionResult {
    let (id, title) = ("A8", "value decrease under the stopping criterion");
    let threshold = "V(x+) < V(x) at every step with |x| > 1e-6".to_string();
    match lyapunov_bench(seed, 20, 80) {
        Err(e) => CriterionResult::errored(id, title, &e, threshold),
        Ok(s) => {
            let passed = s.steps_checked > 0 && s.decrease_violations == 0;
            let measured = format!(
                "{} steps, {} violations, worst V ratio {:.6}, sigma {:.3e}, eps {:.6}, \
                 suboptimality-bound violations {}, cap hits {}, max iterations {}",
                s.steps_checked,
                s.decrease_violations,
                s.worst_value_ratio,
                s.sigma,
                s.epsilon,
                s.suboptimality_violations,
                s.criterion_misses,
                s.max_iterations_used
            );
            CriterionResult::new(id, title, passed, measured, threshold)
        }
    }
}

/// Worst `‖∇h − ∇h_fd‖ / max(1, ‖∇h‖)` over random anesthesia problems.
pub fn gradient_check(
    patient: &PatientModel,
    base: &Scenario,
    seed: u64,
    points: usize,
) -> Result<f64> {
    let system = patient_system(patient);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..points {
        let t = rng.random_range(0.0..30.0);
        let offset = rng.random_range(-10.0..10.0);
        let problem = controller_problem(&system, patient, base, t, offset)?;
        let ce_scale = [10.0, 40.0, 200.0, 4.0, 20.0, 40.0, 40.0, 20.0];
        let x = DVector::from_fn(STATE_DIM, |i, _| rng.random_range(0.0..ce_scale[i]));
        let rows: Vec<DVector<f64>> = problem
            .boxes()
            .iter()
            .map(|b| DVector::from_fn(2, |j, _| rng.random_range(0.0..=b.upper()[j])))
            .collect();
        let mu = InputSequence::from_rows(&rows)?;
        let g = flatten(&gradient(&problem, &x, &mu)?);
        let fd = flatten(&finite_difference_gradient(
            &problem,
            &x,
            &mu,
            GRADIENT_FD_STEP,
        )?);
        worst = worst.max((&g - &fd).norm() / g.norm().max(1.0));
    }
    Ok(worst)
}

pub fn a9_gradient(patient: &PatientModel, base: &Scenario, seed: u64) -> CriterionResult {
    let (id, title) = ("A9", "adjoint gradient vs finite differences");
    let threshold = format!("relative error <= {GRADIENT_REL_TOL:e} on {GRADIENT_POINTS} points");
    match gradient_check(patient, base, seed, GRADIENT_POINTS) {
        Err(e) => CriterionResult::errored(id, title, &e, threshold),
        Ok(worst) => CriterionResult::new(
            id,
            title,
            worst <= GRADIENT_REL_TOL,
            format!("worst relative error {worst:.3e}"),
            threshold,
        ),
    }
}

/// Relative gaps between one exact ZOH step and fine-grid integration.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DiscretizationStats {
    /// Against fourth-order Runge-Kutta.
    pub rk4: f64,
    /// Against explicit Euler, whose own error is first order in the substep.
    pub euler: f64,
}

/// One ZOH step against [`ZOH_SUBSTEPS`] integration substeps, from a
/// drug-free and a loaded initial state under constant induction-level
/// infusion. Reports the worst relative error per integrator.
pub fn discretization_check(patient: &PatientModel) -> Result<DiscretizationStats> {
    let u = DVector::from_vec(vec![4.0 * patient.weight_kg(), 0.36 * patient.weight_kg()]);
    let loaded = DVector::from_vec(vec![20.0, 60.0, 150.0, 3.0, 10.0, 15.0, 5.0, 8.0]);
    let mut stats = DiscretizationStats {
        rk4: 0.0,
        euler: 0.0,
    };
    let (ac, bc, ts) = (patient.ac(), patient.bc(), patient.ts_min());
    for x0 in [DVector::zeros(STATE_DIM), loaded] {
        let exact = patient.ad() * &x0 + patient.bd() * &u;
        let rk4 = rk4_zoh(ac, bc, &x0, &u, ts, ZOH_SUBSTEPS);
        let euler = euler_zoh(ac, bc, &x0, &u, ts, ZOH_SUBSTEPS);
        stats.rk4 = stats.rk4.max((&exact - &rk4).norm() / rk4.norm());
        stats.euler = stats.euler.max((&exact - &euler).norm() / euler.norm());
    }
    if !(stats.rk4.is_finite() && stats.euler.is_finite()) {
        return Err(Error::Numerical("non-finite discretization error".into()));
    }
    Ok(stats)
}

/// Passes on the Runge-Kutta comparison. The Euler gap is reported
/// alongside; at this substep count it is dominated by Euler's own
/// truncation error, roughly `h/2 · ‖Ac‖`.
pub fn a10_discretization(patient: &PatientModel) -> CriterionResult {
    let (id, title) = ("A10", "ZOH discretization vs fine integration");
    let threshold = format!(
        "relative state error <= {ZOH_REL_TOL:e} against {ZOH_SUBSTEPS} explicit RK4 substeps"
    );
    match discretization_check(patient) {
        Err(e) => CriterionResult::errored(id, title, &e, threshold),
        Ok(s) => CriterionResult::new(
            id,
            title,
            s.rk4 <= ZOH_REL_TOL,
            format!(
                "worst relative error {:.3e} (explicit Euler: {:.3e})",
                s.rk4, s.euler
            ),
            threshold,
        ),
    }
}

pub fn a11_model_sanity(pd: &PdParams) -> CriterionResult {
    let (id, title) = ("A11", "BIS surface sanity");
    let threshold = format!(
        "bis(0,0) = e0 exactly, half effect at each C50 within {BIS_HALF_EFFECT_TOL:e}, \
         range [e0 - emax, e0] and monotone on a 50x50 grid"
    );
    let check = || -> Result<(bool, String)> {
        let awake = bis(0.0, 0.0, pd)?;
        let half = pd.e0 - pd.emax / 2.0;
        let hp = bis(pd.c50p, 0.0, pd)?;
        let hr = bis(0.0, pd.c50r, pd)?;
        let n = 50;
        let grid: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        bis(
                            10.0 * i as f64 / (n - 1) as f64,
                            40.0 * j as f64 / (n - 1) as f64,
                            pd,
                        )
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<_>>()?;
        let in_range = grid
            .iter()
            .flatten()
            .all(|&b| b >= pd.e0 - pd.emax && b <= pd.e0);
        let monotone = (0..n).all(|i| {
            (0..n).all(|j| {
                (i + 1 >= n || grid[i + 1][j] <= grid[i][j])
                    && (j + 1 >= n || grid[i][j + 1] <= grid[i][j])
            })
        });
        let passed = awake == pd.e0
            && (hp - half).abs() <= BIS_HALF_EFFECT_TOL
            && (hr - half).abs() <= BIS_HALF_EFFECT_TOL
            && in_range
            && monotone;
        Ok((
            passed,
            format!(
                "bis(0,0) = {awake}, bis(c50p,0) - {half} = {:.1e}, bis(0,c50r) - {half} = {:.1e}, \
                 in range {in_range}, monotone {monotone}",
                hp - half,
                hr - half
            ),
        ))
    };
    match check() {
        Err(e) => CriterionResult::errored(id, title, &e, threshold),
        Ok((passed, measured)) => CriterionResult::new(id, title, passed, measured, threshold),
    }
}

/// Runs A1–A11 for `patient` under `base` (the closed-loop settings; its
/// disturbances and duration are adapted per criterion).
pub fn run_suite(patient: &PatientModel, base: &Scenario) -> SuiteReport {
    let seed = base.seed;
    let nominal_s = nominal_scenario(base);
    let disturbed_s = disturbance_scenario(base);
    let (nominal, disturbed) = std::thread::scope(|s| {
        let n = s.spawn(|| execute(patient, &nominal_s));
        let d = s.spawn(|| execute(patient, &disturbed_s));
        (
            n.join().expect("suite worker panicked"),
            d.join().expect("suite worker panicked"),
        )
    });
    let comparison = iteration_comparison(patient, base);
    SuiteReport::new(vec![
        a1_rise_time(&nominal),
        a2_overshoot(&nominal),
        a3_maintenance(&nominal, &disturbed),
        a4_disturbance(&disturbed),
        a5_iterations(&comparison),
        a6_uncertainty(patient, base),
        a7_contraction(seed),
        a8_lyapunov(seed),
        a9_gradient(patient, base, seed),
        a10_discretization(patient),
        a11_model_sanity(patient.pd()),
    ])
}
