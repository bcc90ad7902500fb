use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::pkpd::InputBoundsSchedule;
use crate::solver::SolverConfig;
use crate::{Error, Result};

/// Closed-loop experiment description. Every field has a default, so a
/// scenario file only needs the keys it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub duration_min: f64,
    pub ts_min: f64,
    pub horizon: usize,
    pub controller: SolverConfig,
    pub bis_ref: f64,
    pub cost_weights: CostWeights,
    pub initial_inputs: InitialInputs,
    pub disturbances: Vec<Disturbance>,
    pub bounds: InputBoundsSchedule,
    /// Applied to the simulated patient only; the controller predicts with
    /// the nominal parameters.
    pub plant_perturbation: PlantPerturbation,
    pub estimator: EstimatorConfig,
    /// Seeds the measurement-noise generator.
    pub seed: u64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            duration_min: 60.0,
            ts_min: 0.1,
            horizon: 25,
            controller: SolverConfig::default(),
            bis_ref: 50.0,
            cost_weights: CostWeights::default(),
            initial_inputs: InitialInputs::default(),
            disturbances: Vec::new(),
            bounds: InputBoundsSchedule::default(),
            plant_perturbation: PlantPerturbation::default(),
            estimator: EstimatorConfig::default(),
            seed: 0,
        }
    }
}

/// `R` (2×2, row-major) and `ρ` of the stage cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostWeights {
    pub r: [[f64; 2]; 2],
    pub rho: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self {
            r: [[1.0, 0.0], [0.0, 1000.0]],
            rho: 10.0,
        }
    }
}

impl CostWeights {
    pub fn r_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(2, 2, |i, j| self.r[i][j])
    }
}

/// Initial guess for every step of the first plan: mg/min and µg/min.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialInputs {
    pub propofol: f64,
    pub remifentanil: f64,
}

impl Default for InitialInputs {
    fn default() -> Self {
        Self {
            propofol: 1.0,
            remifentanil: 1.0,
        }
    }
}

/// Additive offset on the measured BIS over `[start, start + duration)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Disturbance {
    pub start_min: f64,
    pub duration_min: f64,
    pub bis_offset: f64,
}

// Sample times are multiples of ts computed in floating point; this keeps a
// window edge that lands on a sample from flickering.
const TIME_EPS: f64 = 1e-9;

impl Disturbance {
    /// +10 BIS at minute 20 and −10 BIS at minute 40, one minute each.
    pub fn default_profile() -> Vec<Disturbance> {
        vec![
            Disturbance {
                start_min: 20.0,
                duration_min: 1.0,
                bis_offset: 10.0,
            },
            Disturbance {
                start_min: 40.0,
                duration_min: 1.0,
                bis_offset: -10.0,
            },
        ]
    }

    pub fn end_min(&self) -> f64 {
        self.start_min + self.duration_min
    }

    pub fn is_active(&self, t_min: f64) -> bool {
        t_min >= self.start_min - TIME_EPS && t_min < self.end_min() - TIME_EPS
    }
}

/// Multiplicative factors on the simulated patient's parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantPerturbation {
    pub c50p_scale: f64,
    pub c50r_scale: f64,
    pub pk_rate_scale: f64,
}

impl Default for PlantPerturbation {
    fn default() -> Self {
        Self {
            c50p_scale: 1.0,
            c50r_scale: 1.0,
            pk_rate_scale: 1.0,
        }
    }
}

impl PlantPerturbation {
    pub fn is_identity(&self) -> bool {
        self.c50p_scale == 1.0 && self.c50r_scale == 1.0 && self.pk_rate_scale == 1.0
    }
}

/// How the controller obtains its state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum EstimatorConfig {
    /// The controller reads the plant state directly.
    #[default]
    FullState,
    /// Extended Kalman filter on the measured BIS. `noise_std` is the
    /// standard deviation of the simulated sensor noise and of the filter's
    /// measurement model; `process_noise` is the per-step state noise
    /// variance.
    Filtered {
        noise_std: f64,
        #[serde(default = "default_process_noise")]
        process_noise: f64,
    },
}

fn default_process_noise() -> f64 {
    1e-4
}

impl Scenario {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::config(format!("cannot read scenario file {}: {e}", path.display()))
        })?;
        Self::from_json_str(&text)
            .map_err(|e| Error::config(format!("invalid scenario file {}: {e}", path.display())))
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let scenario: Scenario =
            serde_json::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        scenario.validate()?;
        Ok(scenario)
    }

    /// Number of plant steps; the trace has one more row than this.
    pub fn steps(&self) -> usize {
        (self.duration_min / self.ts_min).round() as usize
    }

    pub fn disturbance_at(&self, t_min: f64) -> f64 {
        self.disturbances
            .iter()
            .filter(|d| d.is_active(t_min))
            .fold(0.0, |acc, d| acc + d.bis_offset)
    }

    pub fn disturbance_active(&self, t_min: f64) -> bool {
        self.disturbances.iter().any(|d| d.is_active(t_min))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ts_min > 0.0 && self.ts_min.is_finite()) {
            return Err(Error::config(format!(
                "ts_min must be positive, got {}",
                self.ts_min
            )));
        }
        if !(self.duration_min >= 0.0 && self.duration_min.is_finite()) {
            return Err(Error::config(format!(
                "duration_min must be nonnegative, got {}",
                self.duration_min
            )));
        }
        let steps = self.duration_min / self.ts_min;
        if (steps - steps.round()).abs() > 1e-6 {
            return Err(Error::config(format!(
                "duration_min {} is not a whole number of samples of {}",
                self.duration_min, self.ts_min
            )));
        }
        if self.horizon == 0 {
            return Err(Error::config("horizon must be at least 1"));
        }
        if !self.bis_ref.is_finite() {
            return Err(Error::config("bis_ref must be finite"));
        }
        let w = &self.cost_weights;
        if !(w.rho > 0.0 && w.rho.is_finite()) {
            return Err(Error::config(format!(
                "rho must be positive, got {}",
                w.rho
            )));
        }
        let r = w.r_matrix();
        if r.iter().any(|v| !v.is_finite()) || r[(0, 1)] != r[(1, 0)] {
            return Err(Error::config("R must be finite and symmetric"));
        }
        if r.symmetric_eigenvalues().min() <= 0.0 {
            return Err(Error::config("R must be positive definite"));
        }
        let u0 = self.initial_inputs;
        if !(u0.propofol.is_finite() && u0.remifentanil.is_finite()) {
            return Err(Error::config("initial inputs must be finite"));
        }
        for d in &self.disturbances {
            if !(d.start_min.is_finite() && d.duration_min >= 0.0 && d.bis_offset.is_finite()) {
                return Err(Error::config(format!("invalid disturbance {d:?}")));
            }
        }
        let p = self.plant_perturbation;
        for (name, v) in [
            ("c50p_scale", p.c50p_scale),
            ("c50r_scale", p.c50r_scale),
            ("pk_rate_scale", p.pk_rate_scale),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{name} must be positive, got {v}")));
            }
        }
        if let EstimatorConfig::Filtered {
            noise_std,
            process_noise,
        } = self.estimator
        {
            if !(noise_std >= 0.0 && noise_std.is_finite()) {
                return Err(Error::config("noise_std must be nonnegative"));
            }
            if !(process_noise >= 0.0 && process_noise.is_finite()) {
                return Err(Error::config("process_noise must be nonnegative"));
            }
        }
        self.bounds.validate()?;
        self.controller.validate()
    }
}
