use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Discrete-time dynamics `x⁺ = f(x, u)` with their Jacobians.
///
/// Implementations must be deterministic. The Jacobians are supplied by the
/// model; nothing in the crate differentiates `step` automatically.
pub trait DiscreteSystem {
    fn state_dim(&self) -> usize;
    fn input_dim(&self) -> usize;

    fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64>;

    /// `∂f/∂x`, `n_x × n_x`.
    fn jacobian_x(&self, x: &DVector<f64>, u: &DVector<f64>) -> DMatrix<f64>;

    /// `∂f/∂u`, `n_x × n_u`.
    fn jacobian_u(&self, x: &DVector<f64>, u: &DVector<f64>) -> DMatrix<f64>;

    /// Vector-Jacobian products `(Aᵀλ, Bᵀλ)` used by the costate sweep.
    ///
    /// The default forms both Jacobians; systems with constant Jacobians
    /// should override it to skip the allocation.
    fn adjoint(
        &self,
        x: &DVector<f64>,
        u: &DVector<f64>,
        lambda: &DVector<f64>,
    ) -> (DVector<f64>, DVector<f64>) {
        (
            self.jacobian_x(x, u).tr_mul(lambda),
            self.jacobian_u(x, u).tr_mul(lambda),
        )
    }
}

impl<T: DiscreteSystem + ?Sized> DiscreteSystem for &T {
    fn state_dim(&self) -> usize {
        (**self).state_dim()
    }
    fn input_dim(&self) -> usize {
        (**self).input_dim()
    }
    fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        (**self).step(x, u)
    }
    fn jacobian_x(&self, x: &DVector<f64>, u: &DVector<f64>) -> DMatrix<f64> {
        (**self).jacobian_x(x, u)
    }
    fn jacobian_u(&self, x: &DVector<f64>, u: &DVector<f64>) -> DMatrix<f64> {
        (**self).jacobian_u(x, u)
    }
    fn adjoint(
        &self,
        x: &DVector<f64>,
        u: &DVector<f64>,
        lambda: &DVector<f64>,
    ) -> (DVector<f64>, DVector<f64>) {
        (**self).adjoint(x, u, lambda)
    }
}

/// `x⁺ = A x + B u`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
}

impl LinearSystem {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::shape(format!(
                "state matrix must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != a.nrows() || b.ncols() == 0 {
            return Err(Error::shape(format!(
                "input matrix must be {}xm with m >= 1, got {}x{}",
                a.nrows(),
                b.nrows(),
                b.ncols()
            )));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }
}

impl DiscreteSystem for LinearSystem {
    fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b * u
    }

    fn jacobian_x(&self, _x: &DVector<f64>, _u: &DVector<f64>) -> DMatrix<f64> {
        self.a.clone()
    }

    fn jacobian_u(&self, _x: &DVector<f64>, _u: &DVector<f64>) -> DMatrix<f64> {
        self.b.clone()
    }

    fn adjoint(
        &self,
        _x: &DVector<f64>,
        _u: &DVector<f64>,
        lambda: &DVector<f64>,
    ) -> (DVector<f64>, DVector<f64>) {
        (self.a.tr_mul(lambda), self.b.tr_mul(lambda))
    }
}
