use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::iteration::project;
use crate::model::{
    gradient, running_cost, DiscreteSystem, InputBox, InputSequence, LinearSystem, OcpProblem,
    QuadraticCost, StageCost,
};
use crate::reference::{flatten, CondensedLq};
use crate::{Error, Result};

/// Per-iteration contraction factor `ε = √(1 − (2m²/L₂)γ + m²γ²)` of
/// projected gradient on an `m`-strongly convex objective with
/// `L₂`-Lipschitz gradient.
pub fn epsilon_from_constants(gamma: f64, m: f64, l2: f64) -> Result<f64> {
    if !(l2 > 0.0 && m > 0.0 && m <= l2) {
        return Err(Error::domain(format!(
            "need 0 < m <= L2, got m = {m}, L2 = {l2}"
        )));
    }
    if !(gamma > 0.0 && gamma < 2.0 / l2) {
        return Err(Error::domain(format!(
            "step size {gamma} outside (0, 2/L2) = (0, {})",
            2.0 / l2
        )));
    }
    let eps_sq = 1.0 - 2.0 * m * m / l2 * gamma + m * m * gamma * gamma;
    Ok(eps_sq.max(0.0).sqrt())
}

/// Axis-aligned state region to sample in.
#[derive(Debug, Clone)]
pub struct SampleRegion {
    pub state_lower: DVector<f64>,
    pub state_upper: DVector<f64>,
}

impl SampleRegion {
    pub fn new(state_lower: DVector<f64>, state_upper: DVector<f64>) -> Result<Self> {
        if state_lower.len() != state_upper.len()
            || state_lower
                .iter()
                .zip(state_upper.iter())
                .any(|(l, u)| !(l <= u) || !l.is_finite() || !u.is_finite())
        {
            return Err(Error::config(
                "sample region needs finite bounds with lower <= upper",
            ));
        }
        Ok(Self {
            state_lower,
            state_upper,
        })
    }

    fn sample_state(&self, rng: &mut impl Rng) -> DVector<f64> {
        DVector::from_fn(self.state_lower.len(), |i, _| {
            sample_between(rng, self.state_lower[i], self.state_upper[i])
        })
    }
}

fn sample_between(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

fn sample_inputs(rng: &mut impl Rng, boxes: &[InputBox]) -> InputSequence {
    let rows: Vec<DVector<f64>> = boxes
        .iter()
        .map(|b| {
            DVector::from_fn(b.dim(), |j, _| {
                sample_between(rng, b.lower()[j], b.upper()[j])
            })
        })
        .collect();
    InputSequence::from_rows(&rows).expect("boxes share one dimension")
}

/// Sampled constants. They are empirical: `l2` and `sigma` bound the true
/// Lipschitz constants from below, `m` bounds the strong convexity modulus
/// from above.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantEstimates {
    pub l2: f64,
    pub m: f64,
    pub sigma: f64,
    /// Value-function sensitivity part of `sigma`.
    pub l_u: f64,
    /// Stage-cost Lipschitz part of `sigma`.
    pub l1: f64,
}

/// Estimate `L₂`, `m` and `σ = L_u + L₁` by sampling states in `region` and
/// input sequences in the problem's boxes.
///
/// `σ` needs optimal values, obtained from long projected-gradient runs; it
/// uses one tenth of `sample_count` (at least two) states.
pub fn estimate_constants<S: DiscreteSystem, C: StageCost>(
    problem: &OcpProblem<S, C>,
    region: &SampleRegion,
    sample_count: usize,
    seed: u64,
) -> Result<ConstantEstimates> {
    if sample_count < 2 {
        return Err(Error::config("need at least two samples"));
    }
    if region.state_lower.len() != problem.state_dim() {
        return Err(Error::shape(
            "sample region dimension does not match the state",
        ));
    }
    if problem.boxes().iter().any(|b| {
        b.lower()
            .iter()
            .chain(b.upper().iter())
            .any(|v| !v.is_finite())
    }) {
        return Err(Error::config(
            "constant estimation needs finite input boxes",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut l2 = 0.0_f64;
    let mut m = f64::INFINITY;
    for _ in 0..sample_count {
        let x = region.sample_state(&mut rng);
        let mu1 = sample_inputs(&mut rng, problem.boxes());
        let mu2 = sample_inputs(&mut rng, problem.boxes());
        let d = flatten(&mu1) - flatten(&mu2);
        let dn2 = d.norm_squared();
        if dn2 == 0.0 {
            continue;
        }
        let dg = flatten(&gradient(problem, &x, &mu1)?) - flatten(&gradient(problem, &x, &mu2)?);
        l2 = l2.max(dg.norm() / dn2.sqrt());
        m = m.min(dg.dot(&d) / dn2);
    }
    if !(m > 0.0) {
        return Err(Error::NonConvex { m_hat: m });
    }

    let gamma = 1.0 / l2;
    let sigma_samples = (sample_count / 10).max(2);
    let mut l_u = 0.0_f64;
    let mut l1 = 0.0_f64;
    for _ in 0..sigma_samples {
        let x = region.sample_state(&mut rng);
        let (_, mu_star) = reference_solve(problem, &x, gamma)?;
        let u_star = mu_star.input(0);
        let u = sample_inputs(&mut rng, &problem.boxes()[..1]).input(0);
        let du = (&u - &u_star).norm();
        if du == 0.0 {
            continue;
        }
        let system = problem.system();
        let (v_sub, _) = reference_solve(problem, &system.step(&x, &u), gamma)?;
        let (v_opt, _) = reference_solve(problem, &system.step(&x, &u_star), gamma)?;
        l_u = l_u.max((v_sub - v_opt).abs() / du);
        let cost = problem.cost();
        l1 = l1.max((cost.evaluate(&x, &u) - cost.evaluate(&x, &u_star)).abs() / du);
    }
    Ok(ConstantEstimates {
        l2,
        m,
        sigma: l_u + l1,
        l_u,
        l1,
    })
}

/// Long projected-gradient run to a tight residual; returns `(V̂(x), μ̂*)`.
fn reference_solve<S: DiscreteSystem, C: StageCost>(
    problem: &OcpProblem<S, C>,
    x: &DVector<f64>,
    gamma: f64,
) -> Result<(f64, InputSequence)> {
    let mut mu = project(
        &InputSequence::zeros(problem.horizon(), problem.input_dim()),
        problem.boxes(),
    )?;
    for _ in 0..200_000 {
        let g = gradient(problem, x, &mu)?;
        let next = project(
            &InputSequence::new(mu.values() - gamma * g.values()),
            problem.boxes(),
        )?;
        let res = mu.distance(&next);
        mu = next;
        if res < 1e-11 * (1.0 + mu.norm()) {
            break;
        }
    }
    Ok((running_cost(problem, x, &mu)?, mu))
}

/// Closed-form constants of a box-constrained linear-quadratic problem.
///
/// The condensed running cost is `h(x, μ) = ½μᵀHμ + μᵀFx + ½xᵀGx`, so the
/// strong convexity modulus and gradient Lipschitz constant are the extreme
/// eigenvalues of `H`. [`LqAnalysis::sigma_bound`] composes
/// `σ = L₂L₄(1 + L₃) + L₁` from norm bounds valid on a ball of states.
#[derive(Debug, Clone)]
pub struct LqAnalysis {
    condensed: CondensedLq,
    boxes: Vec<InputBox>,
    m: f64,
    l2: f64,
    a_norm: f64,
    b_norm: f64,
    r_norm: f64,
}

fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    m.clone().svd(false, false).singular_values.max()
}

fn box_radius(boxes: &[InputBox]) -> f64 {
    boxes
        .iter()
        .flat_map(|b| {
            b.lower()
                .iter()
                .zip(b.upper().iter())
                .map(|(l, u)| l.abs().max(u.abs()))
        })
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
}

impl LqAnalysis {
    pub fn new(problem: &OcpProblem<LinearSystem, QuadraticCost>) -> Result<Self> {
        let condensed = CondensedLq::new(problem.system(), problem.cost(), problem.horizon());
        let eig = condensed.hessian.clone().symmetric_eigenvalues();
        let (m, l2) = (eig.min(), eig.max());
        if !(m > 0.0) {
            return Err(Error::NonConvex { m_hat: m });
        }
        Ok(Self {
            m,
            l2,
            a_norm: spectral_norm(problem.system().a()),
            b_norm: spectral_norm(problem.system().b()),
            r_norm: spectral_norm(problem.cost().r()),
            boxes: problem.boxes().to_vec(),
            condensed,
        })
    }

    pub fn strong_convexity(&self) -> f64 {
        self.m
    }

    pub fn smoothness(&self) -> f64 {
        self.l2
    }

    pub fn condensed(&self) -> &CondensedLq {
        &self.condensed
    }

    /// `σ = L_u + L₁` for states with `‖x‖ ≤ state_radius`.
    ///
    /// The value Lipschitz constant of `h` is bounded by the largest gradient
    /// norm over the ball (enlarged to contain one-step successors) times the
    /// input boxes; `L₃ = ‖F‖/m` bounds the sensitivity of the constrained
    /// minimizer and `L₄ = ‖B‖`.
    pub fn sigma_bound(&self, state_radius: f64) -> Result<f64> {
        let input_radius = box_radius(&self.boxes);
        let first_radius = box_radius(&self.boxes[..1]);
        if !input_radius.is_finite() {
            return Err(Error::config("analytic sigma needs finite input boxes"));
        }
        let reach = state_radius.max(self.a_norm * state_radius + self.b_norm * first_radius);
        let h_norm = self.l2;
        let f_norm = spectral_norm(&self.condensed.cross);
        let g_norm = spectral_norm(&self.condensed.state);
        let l2_value = (h_norm + f_norm) * input_radius + (f_norm + g_norm) * reach;
        let l3 = f_norm / self.m;
        let l4 = self.b_norm;
        let l1 = 2.0 * self.r_norm * first_radius;
        Ok(l2_value * l4 * (1.0 + l3) + l1)
    }

    /// Optimal value `V(x)` and minimizer by an exact box-QP solve.
    pub fn value(&self, x: &DVector<f64>) -> Result<(f64, InputSequence)> {
        self.condensed.solve(x, &self.boxes)
    }
}
