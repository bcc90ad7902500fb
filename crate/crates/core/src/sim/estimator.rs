use nalgebra::{DMatrix, DVector};

use super::EstimatorConfig;
use crate::pkpd::{PatientModel, PdParams, EFFECT_P, EFFECT_R, STATE_DIM};

/// Extended Kalman filter for the PK state from the scalar BIS measurement.
///
/// Prediction uses the linear discretized dynamics. The update linearizes
/// the BIS map at the predicted effect-site concentrations. Estimates are
/// clamped at zero since compartment contents cannot be negative.
#[derive(Debug, Clone)]
pub struct ExtendedKalmanFilter {
    ad: DMatrix<f64>,
    bd: DMatrix<f64>,
    pd: PdParams,
    x: DVector<f64>,
    p: DMatrix<f64>,
    q: f64,
    r: f64,
    resets: usize,
}

// Below this innovation variance the update carries no information.
const MIN_INNOVATION_VARIANCE: f64 = 1e-12;

impl ExtendedKalmanFilter {
    /// Starts from the drug-free state with zero covariance.
    pub fn new(model: &PatientModel, noise_std: f64, process_noise: f64) -> Self {
        Self {
            ad: model.ad().clone(),
            bd: model.bd().clone(),
            pd: *model.pd(),
            x: DVector::zeros(STATE_DIM),
            p: DMatrix::zeros(STATE_DIM, STATE_DIM),
            q: process_noise,
            r: noise_std * noise_std,
            resets: 0,
        }
    }

    pub fn with_initial(mut self, x0: DVector<f64>, p0: DMatrix<f64>) -> Self {
        self.x = x0;
        self.p = p0;
        self
    }

    pub fn estimate(&self) -> &DVector<f64> {
        &self.x
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.p
    }

    /// Number of times the covariance went non-finite and was reset.
    pub fn resets(&self) -> usize {
        self.resets
    }

    pub fn predict(&mut self, u: &DVector<f64>) {
        let x = &self.ad * &self.x + &self.bd * u;
        let mut p = &self.ad * &self.p * self.ad.transpose();
        for i in 0..STATE_DIM {
            p[(i, i)] += self.q;
        }
        self.x = x.map(|v| v.max(0.0));
        self.p = p;
    }

    pub fn correct(&mut self, measured_bis: f64) {
        let (ce_p, ce_r) = (self.x[EFFECT_P], self.x[EFFECT_R]);
        let predicted = self.pd.bis_clamped(ce_p, ce_r);
        let (dp, dr) = self.pd.bis_gradient_clamped(ce_p, ce_r);
        let mut h = DVector::zeros(STATE_DIM);
        h[EFFECT_P] = dp;
        h[EFFECT_R] = dr;

        let ph = &self.p * &h;
        let s = h.dot(&ph) + self.r;
        if !(s > MIN_INNOVATION_VARIANCE) {
            return;
        }
        let gain = ph / s;
        let x = &self.x + &gain * (measured_bis - predicted);
        let p = &self.p - &gain * (h.transpose() * &self.p);
        let p = (&p + p.transpose()) * 0.5;

        if x.iter().chain(p.iter()).all(|v| v.is_finite()) {
            self.x = x.map(|v| v.max(0.0));
            self.p = p;
        } else {
            log::warn!("estimator covariance became non-finite; falling back to prediction only");
            self.resets += 1;
            self.p = DMatrix::from_diagonal_element(STATE_DIM, STATE_DIM, self.q);
        }
    }

    /// Predict with the input applied since the last call (if any), then
    /// correct with the new measurement.
    pub fn update(
        &mut self,
        applied_input: Option<&DVector<f64>>,
        measured_bis: f64,
    ) -> &DVector<f64> {
        if let Some(u) = applied_input {
            self.predict(u);
        }
        self.correct(measured_bis);
        &self.x
    }
}

/// The controller's source of state information.
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone)]
pub enum StateEstimator {
    FullState,
    Filtered(ExtendedKalmanFilter),
}

impl StateEstimator {
    pub fn new(config: &EstimatorConfig, model: &PatientModel) -> Self {
        match *config {
            EstimatorConfig::FullState => StateEstimator::FullState,
            EstimatorConfig::Filtered {
                noise_std,
                process_noise,
            } => {
                StateEstimator::Filtered(ExtendedKalmanFilter::new(model, noise_std, process_noise))
            }
        }
    }

    /// Full-state mode returns `plant_state` unchanged.
    pub fn update(
        &mut self,
        applied_input: Option<&DVector<f64>>,
        measured_bis: f64,
        plant_state: &DVector<f64>,
    ) -> DVector<f64> {
        match self {
            StateEstimator::FullState => plant_state.clone(),
            StateEstimator::Filtered(ekf) => ekf.update(applied_input, measured_bis).clone(),
        }
    }
}
