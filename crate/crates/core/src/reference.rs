//! Reference solvers and numerical oracles.
//!
//! Nothing here is on the control path. These routines exist to check the
//! real-time solver and the plant discretization by independent means:
//! explicitly condensed linear-quadratic problems, an exact box-constrained
//! QP solver, a Riccati iteration for terminal weights, fine-grid explicit
//! integration and a Taylor-series matrix exponential.

use nalgebra::{DMatrix, DVector};

use crate::model::{InputBox, InputSequence, LinearSystem, QuadraticCost};
use crate::{Error, Result};

/// Stack an input sequence row by row: `[μ₀ᵀ, μ₁ᵀ, …]ᵀ`.
pub fn flatten(mu: &InputSequence) -> DVector<f64> {
    let (n, m) = (mu.horizon(), mu.input_dim());
    DVector::from_fn(n * m, |i, _| mu.values()[(i / m, i % m)])
}

pub fn unflatten(v: &DVector<f64>, horizon: usize, input_dim: usize) -> InputSequence {
    InputSequence::new(DMatrix::from_fn(horizon, input_dim, |k, j| {
        v[k * input_dim + j]
    }))
}

/// Flattened lower and upper bounds of a box sequence.
pub fn flatten_boxes(boxes: &[InputBox]) -> (DVector<f64>, DVector<f64>) {
    let m = boxes.first().map_or(0, InputBox::dim);
    let lo = DVector::from_fn(boxes.len() * m, |i, _| boxes[i / m].lower()[i % m]);
    let hi = DVector::from_fn(boxes.len() * m, |i, _| boxes[i / m].upper()[i % m]);
    (lo, hi)
}

/// Linear-quadratic running cost written as an explicit function of the
/// flattened inputs: `h(x, μ) = ½μᵀHμ + μᵀFx + ½xᵀGx`.
#[derive(Debug, Clone)]
pub struct CondensedLq {
    pub hessian: DMatrix<f64>,
    pub cross: DMatrix<f64>,
    pub state: DMatrix<f64>,
    pub horizon: usize,
    pub input_dim: usize,
}

impl CondensedLq {
    pub fn new(system: &LinearSystem, cost: &QuadraticCost, horizon: usize) -> Self {
        let (a, b) = (system.a(), system.b());
        let nx = a.nrows();
        let nu = b.ncols();
        let n = horizon;
        // ξ = Sx x + Su μ over k = 0..N
        let mut sx = DMatrix::zeros((n + 1) * nx, nx);
        let mut su = DMatrix::zeros((n + 1) * nx, n * nu);
        let mut a_pow = DMatrix::identity(nx, nx);
        for k in 0..=n {
            sx.view_mut((k * nx, 0), (nx, nx)).copy_from(&a_pow);
            a_pow = a * &a_pow;
        }
        for k in 1..=n {
            for j in 0..k {
                let mut blk = b.clone();
                for _ in 0..(k - 1 - j) {
                    blk = a * blk;
                }
                su.view_mut((k * nx, j * nu), (nx, nu)).copy_from(&blk);
            }
        }
        let mut qbar = DMatrix::zeros((n + 1) * nx, (n + 1) * nx);
        for k in 0..n {
            qbar.view_mut((k * nx, k * nx), (nx, nx))
                .copy_from(cost.q());
        }
        qbar.view_mut((n * nx, n * nx), (nx, nx))
            .copy_from(cost.p());
        let mut rbar = DMatrix::zeros(n * nu, n * nu);
        for k in 0..n {
            rbar.view_mut((k * nu, k * nu), (nu, nu))
                .copy_from(cost.r());
        }
        let hessian = 2.0 * (su.transpose() * &qbar * &su + rbar);
        let cross = 2.0 * (su.transpose() * &qbar * &sx);
        let state = 2.0 * (sx.transpose() * &qbar * &sx);
        Self {
            hessian: symmetrize(hessian),
            cross,
            state: symmetrize(state),
            horizon: n,
            input_dim: nu,
        }
    }

    pub fn cost(&self, x: &DVector<f64>, mu: &DVector<f64>) -> f64 {
        0.5 * mu.dot(&(&self.hessian * mu))
            + mu.dot(&(&self.cross * x))
            + 0.5 * x.dot(&(&self.state * x))
    }

    pub fn gradient(&self, x: &DVector<f64>, mu: &DVector<f64>) -> DVector<f64> {
        &self.hessian * mu + &self.cross * x
    }

    /// Optimal value and minimizer over the box sequence.
    pub fn solve(&self, x: &DVector<f64>, boxes: &[InputBox]) -> Result<(f64, InputSequence)> {
        let (lo, hi) = flatten_boxes(boxes);
        let q = &self.cross * x;
        let mu = solve_box_qp(&self.hessian, &q, &lo, &hi)?;
        Ok((
            self.cost(x, &mu),
            unflatten(&mu, self.horizon, self.input_dim),
        ))
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    0.5 * (&m + m.transpose())
}

/// Minimize `½μᵀHμ + qᵀμ` over `lower ≤ μ ≤ upper` for positive definite `H`.
///
/// Projected Gauss-Seidel sweeps locate the active set; the free coordinates
/// are then re-solved exactly by Cholesky and the KKT conditions verified.
pub fn solve_box_qp(
    h: &DMatrix<f64>,
    q: &DVector<f64>,
    lower: &DVector<f64>,
    upper: &DVector<f64>,
) -> Result<DVector<f64>> {
    let n = q.len();
    if h.nrows() != n || h.ncols() != n || lower.len() != n || upper.len() != n {
        return Err(Error::shape("box QP dimensions disagree"));
    }
    if (0..n).any(|i| h[(i, i)] <= 0.0) {
        return Err(Error::domain(
            "box QP Hessian must have a positive diagonal",
        ));
    }
    let clamp = |v: f64, i: usize| v.clamp(lower[i], upper[i]);
    let mut mu = DVector::from_fn(n, |i, _| clamp(0.0, i));
    let scale = 1.0 + q.amax() + h.amax();
    for _ in 0..1_000_000 {
        let mut change = 0.0_f64;
        for j in 0..n {
            let off = q[j] + h.row(j).transpose().dot(&mu) - h[(j, j)] * mu[j];
            let new = clamp(-off / h[(j, j)], j);
            change = change.max((new - mu[j]).abs());
            mu[j] = new;
        }
        if change < 1e-13 * scale {
            break;
        }
    }

    // Polish on the identified active set.
    let at_bound = |i: usize, v: &DVector<f64>| v[i] == lower[i] || v[i] == upper[i];
    let free: Vec<usize> = (0..n).filter(|&i| !at_bound(i, &mu)).collect();
    if !free.is_empty() {
        let hff = DMatrix::from_fn(free.len(), free.len(), |a, b| h[(free[a], free[b])]);
        let rhs = DVector::from_fn(free.len(), |a, _| {
            let i = free[a];
            let fixed: f64 = (0..n)
                .filter(|j| at_bound(*j, &mu))
                .map(|j| h[(i, j)] * mu[j])
                .sum();
            -(q[i] + fixed)
        });
        let chol = hff
            .cholesky()
            .ok_or_else(|| Error::Numerical("box QP Hessian is not positive definite".into()))?;
        let sol = chol.solve(&rhs);
        let polished_ok = free
            .iter()
            .enumerate()
            .all(|(a, &i)| sol[a] >= lower[i] && sol[a] <= upper[i]);
        if polished_ok {
            for (a, &i) in free.iter().enumerate() {
                mu[i] = sol[a];
            }
        }
    }

    let grad = h * &mu + q;
    let kkt = (0..n)
        .map(|i| (mu[i] - clamp(mu[i] - grad[i], i)).abs())
        .fold(0.0, f64::max);
    if kkt > 1e-9 * scale {
        return Err(Error::Numerical(format!(
            "box QP reference solve did not converge (KKT residual {kkt:e})"
        )));
    }
    Ok(mu)
}

/// Fixed point of the discrete Riccati recursion for `l = xᵀQx + uᵀRu`.
/// Returns `(P, K)` with the stabilizing feedback `u = −Kx`.
pub fn dare(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let mut p = q.clone();
    for _ in 0..100_000 {
        let s = r + b.transpose() * &p * b;
        let s_inv = s
            .try_inverse()
            .ok_or_else(|| Error::Numerical("singular matrix in Riccati iteration".into()))?;
        let k = &s_inv * b.transpose() * &p * a;
        let next = symmetrize(q + a.transpose() * &p * a - a.transpose() * &p * b * &k);
        let diff = (&next - &p).amax();
        p = next;
        if diff < 1e-14 * (1.0 + p.amax()) {
            let s = r + b.transpose() * &p * b;
            let k = s.try_inverse().unwrap() * b.transpose() * &p * a;
            return Ok((p, k));
        }
    }
    Err(Error::Numerical(
        "Riccati iteration did not converge".into(),
    ))
}

/// Explicit Euler integration of `ẋ = Ac x + Bc u` over `[0, ts]` with
/// constant `u`.
pub fn euler_zoh(
    ac: &DMatrix<f64>,
    bc: &DMatrix<f64>,
    x0: &DVector<f64>,
    u: &DVector<f64>,
    ts: f64,
    substeps: usize,
) -> DVector<f64> {
    let h = ts / substeps as f64;
    let drive = bc * u;
    let mut x = x0.clone();
    for _ in 0..substeps {
        x = &x + h * (ac * &x + &drive);
    }
    x
}

/// Classical fourth-order Runge-Kutta integration of `ẋ = Ac x + Bc u` over
/// `[0, ts]` with constant `u`.
pub fn rk4_zoh(
    ac: &DMatrix<f64>,
    bc: &DMatrix<f64>,
    x0: &DVector<f64>,
    u: &DVector<f64>,
    ts: f64,
    substeps: usize,
) -> DVector<f64> {
    let h = ts / substeps as f64;
    let drive = bc * u;
    let f = |x: &DVector<f64>| ac * x + &drive;
    let mut x = x0.clone();
    for _ in 0..substeps {
        let k1 = f(&x);
        let k2 = f(&(&x + &k1 * (h / 2.0)));
        let k3 = f(&(&x + &k2 * (h / 2.0)));
        let k4 = f(&(&x + &k3 * h));
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    x
}

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
pub fn expm_taylor(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = a.abs().row_sum().max();
    let mut squarings = 0;
    while norm / 2f64.powi(squarings) > 0.25 {
        squarings += 1;
    }
    let scaled = a / 2f64.powi(squarings);
    let mut term = DMatrix::identity(n, n);
    let mut sum = DMatrix::identity(n, n);
    for k in 1..=30 {
        term = &term * &scaled / k as f64;
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_qp_interior_and_active() {
        let h = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let q = DVector::from_vec(vec![-1.0, -1.0]);
        let wide = DVector::from_element(2, 100.0);
        let mu = solve_box_qp(&h, &q, &(-&wide), &wide).unwrap();
        let exact = h.clone().cholesky().unwrap().solve(&(-&q));
        assert!((mu - exact).norm() < 1e-14);

        let lo = DVector::from_element(2, -0.1);
        let hi = DVector::from_element(2, 0.1);
        let mu = solve_box_qp(&h, &q, &lo, &hi).unwrap();
        assert_eq!(mu, DVector::from_element(2, 0.1));
    }

    #[test]
    fn dare_scalar() {
        // x⁺ = x + u, q = r = 1: p = 1 + p - p²/(1+p) → p² - p - 1 = 0
        let one = DMatrix::from_element(1, 1, 1.0);
        let (p, k) = dare(&one, &one, &one, &one).unwrap();
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((p[(0, 0)] - golden).abs() < 1e-12);
        assert!((k[(0, 0)] - golden / (1.0 + golden)).abs() < 1e-12);
    }

    #[test]
    fn expm_scalar_and_nilpotent() {
        let a = DMatrix::from_element(1, 1, -1.0);
        assert!((expm_taylor(&a)[(0, 0)] - (-1f64).exp()).abs() < 1e-15);
        let n = DMatrix::from_row_slice(2, 2, &[0.0, 3.0, 0.0, 0.0]);
        let e = expm_taylor(&n);
        assert!((e - DMatrix::from_row_slice(2, 2, &[1.0, 3.0, 0.0, 1.0])).amax() < 1e-14);
    }

    #[test]
    fn flatten_round_trip() {
        let mu = InputSequence::new(DMatrix::from_row_slice(
            3,
            2,
            &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
        ));
        let v = flatten(&mu);
        assert_eq!(v.as_slice(), &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(unflatten(&v, 3, 2), mu);
    }
}
