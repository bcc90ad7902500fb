use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Stage cost `l(x, u)` and terminal cost `V_f(x)` with gradients.
///
/// Both costs must be nonnegative on admissible arguments.
pub trait StageCost {
    fn evaluate(&self, x: &DVector<f64>, u: &DVector<f64>) -> f64;
    fn grad_x(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64>;
    fn grad_u(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64>;
    fn terminal_evaluate(&self, x: &DVector<f64>) -> f64;
    fn terminal_grad(&self, x: &DVector<f64>) -> DVector<f64>;
}

impl<T: StageCost + ?Sized> StageCost for &T {
    fn evaluate(&self, x: &DVector<f64>, u: &DVector<f64>) -> f64 {
        (**self).evaluate(x, u)
    }
    fn grad_x(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        (**self).grad_x(x, u)
    }
    fn grad_u(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        (**self).grad_u(x, u)
    }
    fn terminal_evaluate(&self, x: &DVector<f64>) -> f64 {
        (**self).terminal_evaluate(x)
    }
    fn terminal_grad(&self, x: &DVector<f64>) -> DVector<f64> {
        (**self).terminal_grad(x)
    }
}

/// `l(x, u) = xᵀQx + uᵀRu`, `V_f(x) = xᵀPx` with symmetric PSD weights.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticCost {
    q: DMatrix<f64>,
    r: DMatrix<f64>,
    p: DMatrix<f64>,
}

impl QuadraticCost {
    pub fn new(q: DMatrix<f64>, r: DMatrix<f64>, p: DMatrix<f64>) -> Result<Self> {
        for (name, m) in [("Q", &q), ("R", &r), ("P", &p)] {
            if !m.is_square() {
                return Err(Error::shape(format!("{name} must be square")));
            }
            if (m - m.transpose()).amax() > 1e-12 * (1.0 + m.amax()) {
                return Err(Error::config(format!("{name} must be symmetric")));
            }
            let min_eig = m.clone().symmetric_eigenvalues().min();
            if min_eig < -1e-12 * (1.0 + m.amax()) {
                return Err(Error::config(format!(
                    "{name} must be positive semidefinite (min eigenvalue {min_eig:e})"
                )));
            }
        }
        if q.nrows() != p.nrows() {
            return Err(Error::shape("Q and P must have the same dimension"));
        }
        Ok(Self { q, r, p })
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }
}

impl StageCost for QuadraticCost {
    fn evaluate(&self, x: &DVector<f64>, u: &DVector<f64>) -> f64 {
        x.dot(&(&self.q * x)) + u.dot(&(&self.r * u))
    }

    fn grad_x(&self, x: &DVector<f64>, _u: &DVector<f64>) -> DVector<f64> {
        2.0 * (&self.q * x)
    }

    fn grad_u(&self, _x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        2.0 * (&self.r * u)
    }

    fn terminal_evaluate(&self, x: &DVector<f64>) -> f64 {
        x.dot(&(&self.p * x))
    }

    fn terminal_grad(&self, x: &DVector<f64>) -> DVector<f64> {
        2.0 * (&self.p * x)
    }
}
