use nalgebra::{DMatrix, DVector};

use super::{DiscreteSystem, StageCost};
use crate::{Error, Result};

/// Component-wise bounds `lower ≤ u ≤ upper`. Infinite bounds are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct InputBox {
    lower: DVector<f64>,
    upper: DVector<f64>,
}

impl InputBox {
    pub fn new(lower: DVector<f64>, upper: DVector<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::shape(format!(
                "box bounds must have equal nonzero length, got {} and {}",
                lower.len(),
                upper.len()
            )));
        }
        for (i, (lo, hi)) in lower.iter().zip(upper.iter()).enumerate() {
            if lo.is_nan() || hi.is_nan() || lo > hi {
                return Err(Error::config(format!(
                    "empty input box at coordinate {i}: [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn from_slices(lower: &[f64], upper: &[f64]) -> Result<Self> {
        Self::new(
            DVector::from_column_slice(lower),
            DVector::from_column_slice(upper),
        )
    }

    pub fn unbounded(dim: usize) -> Self {
        Self {
            lower: DVector::from_element(dim, f64::NEG_INFINITY),
            upper: DVector::from_element(dim, f64::INFINITY),
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &DVector<f64> {
        &self.lower
    }

    pub fn upper(&self) -> &DVector<f64> {
        &self.upper
    }

    pub fn contains(&self, u: &DVector<f64>) -> bool {
        u.len() == self.dim()
            && u.iter()
                .zip(self.lower.iter().zip(self.upper.iter()))
                .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }

    pub fn clamp(&self, u: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            u.len(),
            u.iter()
                .zip(self.lower.iter().zip(self.upper.iter()))
                .map(|(v, (lo, hi))| v.clamp(*lo, *hi)),
        )
    }
}

/// Decision variable `[μ₀, …, μ_{N−1}]`, stored as an `N × n_u` matrix with
/// one input per row.
#[derive(Debug, Clone, PartialEq)]
pub struct InputSequence {
    values: DMatrix<f64>,
}

impl InputSequence {
    pub fn new(values: DMatrix<f64>) -> Self {
        Self { values }
    }

    pub fn zeros(horizon: usize, input_dim: usize) -> Self {
        Self::new(DMatrix::zeros(horizon, input_dim))
    }

    /// Every row equal to `u`.
    pub fn constant(horizon: usize, u: &DVector<f64>) -> Self {
        Self::new(DMatrix::from_fn(horizon, u.len(), |_, j| u[j]))
    }

    pub fn from_rows(rows: &[DVector<f64>]) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::shape("input sequence needs at least one row"));
        };
        let dim = first.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::shape("input sequence rows differ in length"));
        }
        Ok(Self::new(DMatrix::from_fn(rows.len(), dim, |i, j| {
            rows[i][j]
        })))
    }

    pub fn horizon(&self) -> usize {
        self.values.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn input(&self, k: usize) -> DVector<f64> {
        self.values.row(k).transpose()
    }

    pub fn set_input(&mut self, k: usize, u: &DVector<f64>) {
        self.values.set_row(k, &u.transpose());
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    /// Euclidean norm of the flattened sequence.
    pub fn norm(&self) -> f64 {
        self.values.norm()
    }

    pub fn distance(&self, other: &InputSequence) -> f64 {
        (&self.values - &other.values).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Finite-horizon optimal control problem: minimize
/// `Σ_k l(ξ_k, μ_k) + V_f(ξ_N)` subject to `μ_k ∈ box_k`.
#[derive(Debug, Clone)]
pub struct OcpProblem<S, C> {
    system: S,
    cost: C,
    boxes: Vec<InputBox>,
}

impl<S: DiscreteSystem, C: StageCost> OcpProblem<S, C> {
    pub fn new(system: S, cost: C, boxes: Vec<InputBox>) -> Result<Self> {
        if boxes.is_empty() {
            return Err(Error::config("horizon must be at least 1"));
        }
        if system.state_dim() == 0 || system.input_dim() == 0 {
            return Err(Error::shape("state and input dimensions must be positive"));
        }
        if let Some(k) = boxes.iter().position(|b| b.dim() != system.input_dim()) {
            return Err(Error::shape(format!(
                "input box {k} has dimension {}, system expects {}",
                boxes[k].dim(),
                system.input_dim()
            )));
        }
        Ok(Self {
            system,
            cost,
            boxes,
        })
    }

    /// Same box at every step.
    pub fn with_uniform_box(
        system: S,
        cost: C,
        input_box: InputBox,
        horizon: usize,
    ) -> Result<Self> {
        Self::new(system, cost, vec![input_box; horizon])
    }

    pub fn system(&self) -> &S {
        &self.system
    }

    pub fn cost(&self) -> &C {
        &self.cost
    }

    pub fn boxes(&self) -> &[InputBox] {
        &self.boxes
    }

    pub fn horizon(&self) -> usize {
        self.boxes.len()
    }

    pub fn state_dim(&self) -> usize {
        self.system.state_dim()
    }

    pub fn input_dim(&self) -> usize {
        self.system.input_dim()
    }

    pub fn is_feasible(&self, mu: &InputSequence) -> bool {
        mu.horizon() == self.horizon()
            && (0..self.horizon()).all(|k| self.boxes[k].contains(&mu.input(k)))
    }

    pub(crate) fn check_shapes(&self, x: &DVector<f64>, mu: &InputSequence) -> Result<()> {
        if x.len() != self.state_dim() {
            return Err(Error::shape(format!(
                "state has dimension {}, expected {}",
                x.len(),
                self.state_dim()
            )));
        }
        if mu.horizon() != self.horizon() || mu.input_dim() != self.input_dim() {
            return Err(Error::shape(format!(
                "input sequence is {}x{}, expected {}x{}",
                mu.horizon(),
                mu.input_dim(),
                self.horizon(),
                self.input_dim()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_rejects_inverted_bounds() {
        assert!(matches!(
            InputBox::from_slices(&[1.0], &[0.0]),
            Err(Error::Config(_))
        ));
        assert!(InputBox::from_slices(&[0.0, 0.0], &[1.0]).is_err());
        assert!(InputBox::from_slices(&[f64::NAN], &[1.0]).is_err());
        assert!(InputBox::from_slices(&[2.0], &[2.0]).is_ok());
    }

    #[test]
    fn sequence_rows_round_trip() {
        let mut seq = InputSequence::zeros(3, 2);
        seq.set_input(1, &DVector::from_vec(vec![1.0, 2.0]));
        assert_eq!(seq.input(1), DVector::from_vec(vec![1.0, 2.0]));
        assert_eq!(seq.input(0), DVector::zeros(2));
        assert!(InputSequence::from_rows(&[]).is_err());
    }
}
