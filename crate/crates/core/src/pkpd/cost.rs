use nalgebra::{DMatrix, DVector};

use super::{PdParams, EFFECT_P, EFFECT_R, INPUT_DIM, STATE_DIM};
use crate::model::StageCost;
use crate::{Error, Result};

/// `l(x, u) = ½uᵀRu + ρ/2 (y_ref − y)²` and `V_f(x) = ρ/2 (y_ref − y)²`, with
/// `y = BIS(x) + d`.
///
/// `d` is an output offset held constant over the horizon: the difference
/// between the measured BIS and the model's BIS at the current estimate.
#[derive(Debug, Clone)]
pub struct AnesthesiaCost {
    r: DMatrix<f64>,
    rho: f64,
    bis_ref: f64,
    pd: PdParams,
    output_offset: f64,
}

impl AnesthesiaCost {
    pub fn new(r: DMatrix<f64>, rho: f64, bis_ref: f64, pd: PdParams) -> Result<Self> {
        if r.shape() != (INPUT_DIM, INPUT_DIM) {
            return Err(Error::shape("R must be 2x2"));
        }
        if (&r - r.transpose()).amax() > 0.0 {
            return Err(Error::config("R must be symmetric"));
        }
        if r.clone().symmetric_eigenvalues().min() <= 0.0 {
            return Err(Error::config("R must be positive definite"));
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::config(format!("rho must be positive, got {rho}")));
        }
        Ok(Self {
            r,
            rho,
            bis_ref,
            pd,
            output_offset: 0.0,
        })
    }

    pub fn with_output_offset(mut self, offset: f64) -> Self {
        self.output_offset = offset;
        self
    }

    pub fn output_offset(&self) -> f64 {
        self.output_offset
    }

    fn output(&self, x: &DVector<f64>) -> f64 {
        self.pd.bis_clamped(x[EFFECT_P], x[EFFECT_R]) + self.output_offset
    }

    fn tracking_grad(&self, x: &DVector<f64>) -> DVector<f64> {
        let err = self.bis_ref - self.output(x);
        let (dp, dr) = self.pd.bis_gradient_clamped(x[EFFECT_P], x[EFFECT_R]);
        let mut g = DVector::zeros(STATE_DIM);
        g[EFFECT_P] = -self.rho * err * dp;
        g[EFFECT_R] = -self.rho * err * dr;
        g
    }
}

impl StageCost for AnesthesiaCost {
    fn evaluate(&self, x: &DVector<f64>, u: &DVector<f64>) -> f64 {
        0.5 * u.dot(&(&self.r * u)) + self.terminal_evaluate(x)
    }

    fn grad_x(&self, x: &DVector<f64>, _u: &DVector<f64>) -> DVector<f64> {
        self.tracking_grad(x)
    }

    fn grad_u(&self, _x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.r * u
    }

    fn terminal_evaluate(&self, x: &DVector<f64>) -> f64 {
        let err = self.bis_ref - self.output(x);
        0.5 * self.rho * err * err
    }

    fn terminal_grad(&self, x: &DVector<f64>) -> DVector<f64> {
        self.tracking_grad(x)
    }
}
