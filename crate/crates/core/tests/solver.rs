use nalgebra::{DMatrix, DVector};
use pgnmpc::model::{
    running_cost, InputBox, InputSequence, LinearSystem, OcpProblem, QuadraticCost, StageCost,
};
use pgnmpc::reference::{dare, flatten, CondensedLq};
use pgnmpc::solver::{
    epsilon_from_constants, estimate_constants, iterate_once, project, solve_step, stop_threshold,
    warm_start, LqAnalysis, SampleRegion, SolverConfig, SolverMode, TerminalPolicy, WarmStart,
};
use pgnmpc::suite::{contraction_bench, lyapunov_bench, random_lq_problem};
use pgnmpc::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn seq(values: &[f64]) -> InputSequence {
    InputSequence::new(DMatrix::from_column_slice(values.len(), 1, values))
}

fn scalar_boxes(n: usize, lo: f64, hi: f64) -> Vec<InputBox> {
    vec![InputBox::from_slices(&[lo], &[hi]).unwrap(); n]
}

/// `h(μ) = ½ μᵀ diag(d) μ` on a one-step problem with `n` inputs.
fn diagonal_quadratic(d: &[f64], bound: f64) -> OcpProblem<LinearSystem, QuadraticCost> {
    let n = d.len();
    let system = LinearSystem::new(DMatrix::zeros(1, 1), DMatrix::zeros(1, n)).unwrap();
    let r = DMatrix::from_diagonal(&DVector::from_row_slice(d)) * 0.5;
    let cost = QuadraticCost::new(DMatrix::zeros(1, 1), r, DMatrix::zeros(1, 1)).unwrap();
    let b = InputBox::new(
        DVector::from_element(n, -bound),
        DVector::from_element(n, bound),
    )
    .unwrap();
    OcpProblem::with_uniform_box(system, cost, b, 1).unwrap()
}

#[test]
fn projection_examples() {
    let boxes = scalar_boxes(3, 0.0, 4.0);
    assert_eq!(
        project(&seq(&[-1.0, 2.0, 9.0]), &boxes).unwrap(),
        seq(&[0.0, 2.0, 4.0])
    );
    let feasible = seq(&[0.5, 3.0, 4.0]);
    assert_eq!(project(&feasible, &boxes).unwrap(), feasible);
    assert!(InputBox::from_slices(&[1.0], &[0.0]).is_err());
}

#[test]
fn warm_start_examples() {
    let prev = seq(&[1.0, 2.0, 3.0]);
    let boxes = scalar_boxes(3, -10.0, 10.0);
    let xi = DVector::from_element(1, 5.0);
    assert_eq!(
        warm_start(&prev, &xi, &TerminalPolicy::Zero, &boxes).unwrap(),
        seq(&[2.0, 3.0, 0.0])
    );
    assert_eq!(
        warm_start(&prev, &xi, &TerminalPolicy::HoldLast, &boxes).unwrap(),
        seq(&[2.0, 3.0, 3.0])
    );
    assert_eq!(
        warm_start(&seq(&[0.0; 3]), &xi, &TerminalPolicy::Zero, &boxes).unwrap(),
        seq(&[0.0; 3])
    );
    // Re-projection into tighter boxes.
    let tight = scalar_boxes(3, 0.0, 2.5);
    assert_eq!(
        warm_start(&prev, &xi, &TerminalPolicy::HoldLast, &tight).unwrap(),
        seq(&[2.0, 2.5, 2.5])
    );
    let linear = TerminalPolicy::Linear {
        gain: vec![vec![0.5]],
    };
    assert_eq!(
        warm_start(&prev, &xi, &linear, &boxes).unwrap(),
        seq(&[2.0, 3.0, -2.5])
    );
}

#[test]
fn iterate_at_constrained_optimum_is_fixed() {
    // Minimum of ½(μ − 3)²-like shape pushed against the bound: h = ½μ², box [1, 2] → μ* = 1.
    let p = diagonal_quadratic(&[1.0], 10.0);
    let boxes = vec![InputBox::from_slices(&[1.0], &[2.0]).unwrap()];
    let p = OcpProblem::new(p.system().clone(), p.cost().clone(), boxes).unwrap();
    let (next, residual) = iterate_once(&p, &DVector::zeros(1), &seq(&[1.0]), 0.5).unwrap();
    assert_eq!(next, seq(&[1.0]));
    assert_eq!(residual, 0.0);
}

#[test]
fn scalar_quadratic_contracts_by_one_minus_gamma_m() {
    let m = 4.0;
    let p = diagonal_quadratic(&[m], 100.0);
    for gamma in [0.05, 0.2, 0.45] {
        let (next, _) = iterate_once(&p, &DVector::zeros(1), &seq(&[3.0]), gamma).unwrap();
        assert!((next.values()[(0, 0)].abs() - (1.0 - gamma * m).abs() * 3.0).abs() < 1e-12);
    }
}

#[test]
fn contraction_on_random_qp_bench() {
    for gamma_l2 in [0.3, 1.0, 1.7] {
        let s = contraction_bench(21, 100, gamma_l2).unwrap();
        assert!(s.iterations_checked > 100);
        assert!(
            s.worst_ratio <= s.epsilon + 1e-9,
            "gamma {gamma_l2}/L2: {s:?}"
        );
    }
}

#[test]
fn residual_bound_holds_from_one_over_l2() {
    for gamma_l2 in [1.0, 1.4, 1.9] {
        let s = contraction_bench(5, 100, gamma_l2).unwrap();
        let floor = (1.0 - s.epsilon * s.epsilon).sqrt();
        assert!(
            s.worst_residual_ratio >= floor - 1e-9,
            "gamma {gamma_l2}/L2: {s:?}"
        );
    }
}

/// Below `γ = 1/L₂` the residual bound `(1 − ε²)‖μ − μ*‖² ≤ ‖μ − μ⁺‖²`
/// does not hold: `H = diag(1, 4)`, `γ = 0.1`, `μ = (1, 0)`.
#[test]
fn residual_bound_counterexample_below_one_over_l2() {
    let p = diagonal_quadratic(&[1.0, 4.0], 100.0);
    let gamma = 0.1;
    let eps = epsilon_from_constants(gamma, 1.0, 4.0).unwrap();
    let mu = InputSequence::new(DMatrix::from_row_slice(1, 2, &[1.0, 0.0]));
    let (_, residual) = iterate_once(&p, &DVector::zeros(1), &mu, gamma).unwrap();
    let lhs = 1.0 - eps * eps;
    assert!((lhs - 0.04).abs() < 1e-12);
    assert!((residual * residual - 0.01).abs() < 1e-12);
    assert!(lhs > residual * residual);
}

#[test]
fn stop_threshold_examples() {
    let p = diagonal_quadratic(&[2.0], 10.0);
    let x = DVector::zeros(1);
    assert_eq!(
        stop_threshold(&x, &seq(&[0.0]), 0.5, 1.0, p.cost()).unwrap(),
        0.0
    );
    // l(x, μ₀) = ½·2·1² = 1 → √(1 − 0.36)/2 = 0.4.
    let t = stop_threshold(&x, &seq(&[1.0]), 0.6, 2.0, p.cost()).unwrap();
    assert!((t - 0.4).abs() < 1e-15);
    let near_one = stop_threshold(&x, &seq(&[1.0]), 1.0 - 1e-12, 2.0, p.cost()).unwrap();
    assert!(near_one < 1e-5);
    assert!(stop_threshold(&x, &seq(&[1.0]), 1.0, 2.0, p.cost()).is_err());
    assert!(stop_threshold(&x, &seq(&[1.0]), 0.5, 0.0, p.cost()).is_err());
}

#[test]
fn epsilon_examples() {
    assert!((epsilon_from_constants(0.5, 1.0, 2.0).unwrap() - 0.75f64.sqrt()).abs() < 1e-15);
    assert_eq!(epsilon_from_constants(1.0, 1.0, 1.0).unwrap(), 0.0);
    let tiny = epsilon_from_constants(1e-12, 1.0, 2.0).unwrap();
    assert!(tiny < 1.0 && tiny > 0.999_999);
    assert!(matches!(
        epsilon_from_constants(1.0, 1.0, 2.0),
        Err(Error::Domain(_))
    ));
}

#[test]
fn origin_equilibrium_in_both_modes() {
    let (problem, _) = random_lq_problem(2, 3, 2, 6, 1.0).unwrap();
    let x = DVector::zeros(3);
    let warm = WarmStart::cold(InputSequence::zeros(6, 2));
    for config in [
        SolverConfig::fixed(0.01, 20),
        SolverConfig::stopping(0.01, 0.9, 10.0, 50),
    ] {
        let r = solve_step(&problem, &x, &warm, &config).unwrap();
        assert_eq!(r.applied_input, DVector::zeros(2));
        assert_eq!(r.final_residual, 0.0);
        assert_eq!(r.applied_input, r.sequence.input(0));
    }
}

#[test]
fn fixed_iterations_cost_non_increasing_in_count() {
    let (problem, _) = random_lq_problem(8, 3, 2, 8, 1.0).unwrap();
    let lq = LqAnalysis::new(&problem).unwrap();
    let gamma = 1.0 / lq.smoothness();
    let x = DVector::from_vec(vec![2.0, -1.0, 3.0]);
    let warm = WarmStart::cold(InputSequence::zeros(8, 2));
    let costs: Vec<f64> = [1, 10, 100]
        .iter()
        .map(|&k| {
            let r = solve_step(&problem, &x, &warm, &SolverConfig::fixed(gamma, k)).unwrap();
            assert_eq!(r.iterations_used, k);
            assert!(problem.is_feasible(&r.sequence));
            assert_eq!(r.cost_increases, 0);
            r.final_cost
        })
        .collect();
    assert!(costs[1] <= costs[0] && costs[2] <= costs[1], "{costs:?}");
}

#[test]
fn stopping_criterion_meets_threshold_or_flags_cap() {
    let (problem, _) = random_lq_problem(8, 3, 2, 8, 1.0).unwrap();
    let lq = LqAnalysis::new(&problem).unwrap();
    let gamma = 1.0 / lq.smoothness();
    let x = DVector::from_vec(vec![2.0, -1.0, 3.0]);
    let warm = WarmStart::cold(InputSequence::zeros(8, 2));

    let r = solve_step(
        &problem,
        &x,
        &warm,
        &SolverConfig::stopping(gamma, 0.5, 1.0, 100_000),
    )
    .unwrap();
    assert_eq!(r.criterion_met, Some(true));
    assert!(r.final_residual < r.stop_threshold.unwrap());

    let capped = solve_step(
        &problem,
        &x,
        &warm,
        &SolverConfig::stopping(gamma, 0.999, 1e9, 3),
    )
    .unwrap();
    assert_eq!(capped.criterion_met, Some(false));
    assert_eq!(capped.iterations_used, 3);
    assert!(capped.final_residual >= capped.stop_threshold.unwrap());
}

#[test]
fn suboptimality_bound_at_exit() {
    let s = lyapunov_bench(3, 10, 40).unwrap();
    assert!(s.steps_checked > 0);
    assert_eq!(s.suboptimality_violations, 0, "{s:?}");
    assert_eq!(s.decrease_violations, 0, "{s:?}");
}

#[test]
fn step_size_error_on_divergence() {
    // Unconstrained quadratic with γ far above 2/L₂.
    let p = diagonal_quadratic(&[1.0, 4.0], f64::INFINITY);
    let warm = WarmStart::cold(InputSequence::new(DMatrix::from_row_slice(
        1,
        2,
        &[1.0, 1.0],
    )));
    match solve_step(
        &p,
        &DVector::zeros(1),
        &warm,
        &SolverConfig::fixed(10.0, 50),
    ) {
        Err(Error::StepSize { gamma, .. }) => assert_eq!(gamma, 10.0),
        other => panic!("expected a step-size error, got {other:?}"),
    }
}

#[test]
fn config_validation() {
    assert!(SolverConfig::fixed(0.0, 5).validate().is_err());
    assert!(SolverConfig::fixed(0.1, 0).validate().is_err());
    assert!(SolverConfig::stopping(0.1, 1.0, 1.0, 5).validate().is_err());
    assert!(SolverConfig::stopping(0.1, 0.5, 0.0, 5).validate().is_err());
    assert!(SolverConfig::stopping(0.1, 0.5, 1.0, 0).validate().is_err());
    let parsed: SolverConfig =
        serde_json::from_str(r#"{"gamma": 0.01, "mode": {"type": "stopping_criterion", "epsilon": 0.9, "sigma": 3, "max_iterations": 10}}"#)
            .unwrap();
    assert_eq!(
        parsed.mode,
        SolverMode::StoppingCriterion {
            epsilon: 0.9,
            sigma: 3.0,
            max_iterations: 10
        }
    );
    assert_eq!(parsed.terminal_policy, TerminalPolicy::HoldLast);
}

#[test]
fn estimated_constants_of_constant_curvature_quadratic() {
    let p = diagonal_quadratic(&[1.0, 4.0], 1.0);
    let region = SampleRegion::new(DVector::zeros(1), DVector::zeros(1)).unwrap();
    let e = estimate_constants(&p, &region, 2000, 3).unwrap();
    assert!(e.m >= 1.0 - 1e-12 && e.m < 1.05, "{e:?}");
    assert!(e.l2 <= 4.0 + 1e-12 && e.l2 > 3.9, "{e:?}");
}

#[test]
fn estimated_sigma_within_analytic_lq_bound() {
    let (problem, _) = random_lq_problem(5, 2, 1, 5, 1.0).unwrap();
    let lq = LqAnalysis::new(&problem).unwrap();
    let region = SampleRegion::new(
        DVector::from_element(2, -1.0),
        DVector::from_element(2, 1.0),
    )
    .unwrap();
    let e = estimate_constants(&problem, &region, 100, 4).unwrap();
    assert!(e.sigma > 0.0);
    assert!(e.sigma <= lq.sigma_bound(2f64.sqrt()).unwrap(), "{e:?}");
    assert!(e.m >= lq.strong_convexity() - 1e-9);
    assert!(e.l2 <= lq.smoothness() + 1e-9);
}

#[test]
fn reference_qp_matches_dense_unconstrained_solution() {
    let (problem, _) = random_lq_problem(12, 3, 2, 4, f64::INFINITY).unwrap();
    let c = CondensedLq::new(problem.system(), problem.cost(), 4);
    let x = DVector::from_vec(vec![1.0, 2.0, -1.0]);
    let (v, mu) = c.solve(&x, problem.boxes()).unwrap();
    let dense = c.hessian.clone().lu().solve(&(-(&c.cross * &x))).unwrap();
    assert!((flatten(&mu) - dense).norm() < 1e-9);
    assert!((v - running_cost(&problem, &x, &mu).unwrap()).abs() < 1e-9 * v.max(1.0));
}

#[test]
fn riccati_solution_is_a_fixed_point() {
    let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
    let b = DMatrix::from_row_slice(2, 1, &[0.005, 0.1]);
    let q = DMatrix::identity(2, 2);
    let r = DMatrix::from_element(1, 1, 0.1);
    let (p, k) = dare(&a, &b, &q, &r).unwrap();
    let cl = &a - &b * &k;
    let lyap = &q + k.transpose() * &r * &k + cl.transpose() * &p * &cl;
    assert!((lyap - &p).amax() < 1e-9);
    let cost = QuadraticCost::new(q, r, p).unwrap();
    assert!(cost.terminal_evaluate(&DVector::from_vec(vec![1.0, 0.0])) > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_is_feasible_and_nearest(seed in 0u64..100_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let boxes: Vec<InputBox> = (0..4)
            .map(|_| {
                let lo: Vec<f64> = (0..2).map(|_| rng.random_range(-3.0..1.0)).collect();
                let hi: Vec<f64> = lo.iter().map(|l| l + rng.random_range(0.0..3.0)).collect();
                InputBox::from_slices(&lo, &hi).unwrap()
            })
            .collect();
        let mu = InputSequence::new(DMatrix::from_fn(4, 2, |_, _| rng.random_range(-6.0..6.0)));
        let p = project(&mu, &boxes).unwrap();
        for (k, b) in boxes.iter().enumerate() {
            prop_assert!(b.contains(&p.input(k)));
        }
        prop_assert_eq!(project(&p, &boxes).unwrap(), p.clone());
        let d = mu.distance(&p);
        for _ in 0..1000 {
            let y = InputSequence::new(DMatrix::from_fn(4, 2, |k, j| {
                rng.random_range(boxes[k].lower()[j]..=boxes[k].upper()[j])
            }));
            prop_assert!(d <= mu.distance(&y) + 1e-12);
        }
    }

    #[test]
    fn solver_output_always_feasible(seed in 0u64..100_000, count in 1usize..30) {
        let (problem, _) = random_lq_problem(seed, 3, 2, 5, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DVector::from_fn(3, |_, _| rng.random_range(-5.0..5.0));
        let start = InputSequence::new(DMatrix::from_fn(5, 2, |_, _| rng.random_range(-3.0..3.0)));
        let r = solve_step(&problem, &x, &WarmStart::cold(start), &SolverConfig::fixed(0.05, count)).unwrap();
        prop_assert!(problem.is_feasible(&r.sequence));
        prop_assert_eq!(r.applied_input, r.sequence.input(0));
    }
}
