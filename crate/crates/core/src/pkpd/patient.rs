use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{
    build_pk_matrices, discretize, PdParams, PkRates, EFFECT_P, EFFECT_R, INPUT_DIM, STATE_DIM,
};
use crate::model::DiscreteSystem;
use crate::{Error, Result};

/// On-disk patient description.
///
/// ```json
/// {
///   "weight_kg": 70.0,
///   "pk": { "p": { "k12": …, "k13": …, "k10": …, "k21": …, "k31": …, "k1e": …, "ke0": … },
///           "r": { … } },
///   "pd": { "c50p": 1.8, "c50r": 12.5, "e0": 100.0, "emax": 100.0, "eta": 3.76, "beta": 5.1 }
/// }
/// ```
///
/// Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatientFile {
    pub weight_kg: f64,
    pub pk: PkRates,
    pub pd: PdParams,
}

impl PatientFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::config(format!("cannot read patient file {}: {e}", path.display()))
        })?;
        let file: PatientFile = serde_json::from_str(&text)
            .map_err(|e| Error::config(format!("invalid patient file {}: {e}", path.display())))?;
        file.validate()?;
        Ok(file)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.weight_kg > 0.0 && self.weight_kg.is_finite()) {
            return Err(Error::config(format!(
                "weight_kg must be positive, got {}",
                self.weight_kg
            )));
        }
        self.pk.validate()?;
        self.pd.validate()
    }
}

/// Patient PK/PD model, continuous and discretized at `ts_min`.
#[derive(Debug, Clone)]
pub struct PatientModel {
    weight_kg: f64,
    pk: PkRates,
    pd: PdParams,
    ts_min: f64,
    ac: DMatrix<f64>,
    bc: DMatrix<f64>,
    ad: DMatrix<f64>,
    bd: DMatrix<f64>,
}

impl PatientModel {
    pub fn new(weight_kg: f64, pk: PkRates, pd: PdParams, ts_min: f64) -> Result<Self> {
        PatientFile { weight_kg, pk, pd }.validate()?;
        let (ac, bc) = build_pk_matrices(&pk)?;
        let (ad, bd) = discretize(&ac, &bc, ts_min)?;
        Ok(Self {
            weight_kg,
            pk,
            pd,
            ts_min,
            ac,
            bc,
            ad,
            bd,
        })
    }

    pub fn from_file(file: &PatientFile, ts_min: f64) -> Result<Self> {
        Self::new(file.weight_kg, file.pk, file.pd, ts_min)
    }

    pub fn to_file(&self) -> PatientFile {
        PatientFile {
            weight_kg: self.weight_kg,
            pk: self.pk,
            pd: self.pd,
        }
    }

    /// Copy with scaled C50s and PK rates.
    pub fn perturbed(&self, c50p_scale: f64, c50r_scale: f64, pk_rate_scale: f64) -> Result<Self> {
        let pd = PdParams {
            c50p: self.pd.c50p * c50p_scale,
            c50r: self.pd.c50r * c50r_scale,
            ..self.pd
        };
        let pk = PkRates {
            p: self.pk.p.scaled(pk_rate_scale),
            r: self.pk.r.scaled(pk_rate_scale),
        };
        Self::new(self.weight_kg, pk, pd, self.ts_min)
    }

    pub fn weight_kg(&self) -> f64 {
        self.weight_kg
    }

    pub fn pk(&self) -> &PkRates {
        &self.pk
    }

    pub fn pd(&self) -> &PdParams {
        &self.pd
    }

    pub fn ts_min(&self) -> f64 {
        self.ts_min
    }

    pub fn ac(&self) -> &DMatrix<f64> {
        &self.ac
    }

    pub fn bc(&self) -> &DMatrix<f64> {
        &self.bc
    }

    pub fn ad(&self) -> &DMatrix<f64> {
        &self.ad
    }

    pub fn bd(&self) -> &DMatrix<f64> {
        &self.bd
    }

    /// BIS of a full state vector.
    pub fn output(&self, x: &DVector<f64>) -> f64 {
        self.pd.bis_clamped(x[EFFECT_P], x[EFFECT_R])
    }
}

/// The patient as an 8-state, 2-input [`DiscreteSystem`]: `x⁺ = Ad x + Bd u`.
#[derive(Debug, Clone)]
pub struct PatientSystem {
    ad: DMatrix<f64>,
    bd: DMatrix<f64>,
    ad_t: DMatrix<f64>,
    bd_t: DMatrix<f64>,
    pd: PdParams,
}

pub fn patient_system(model: &PatientModel) -> PatientSystem {
    PatientSystem {
        ad: model.ad.clone(),
        bd: model.bd.clone(),
        ad_t: model.ad.transpose(),
        bd_t: model.bd.transpose(),
        pd: model.pd,
    }
}

impl PatientSystem {
    /// `y = BIS(x[pe], x[re])`.
    pub fn output(&self, x: &DVector<f64>) -> f64 {
        self.pd.bis_clamped(x[EFFECT_P], x[EFFECT_R])
    }
}

impl DiscreteSystem for PatientSystem {
    fn state_dim(&self) -> usize {
        STATE_DIM
    }

    fn input_dim(&self) -> usize {
        INPUT_DIM
    }

    fn step(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.ad * x + &self.bd * u
    }

    fn jacobian_x(&self, _x: &DVector<f64>, _u: &DVector<f64>) -> DMatrix<f64> {
        self.ad.clone()
    }

    fn jacobian_u(&self, _x: &DVector<f64>, _u: &DVector<f64>) -> DMatrix<f64> {
        self.bd.clone()
    }

    fn adjoint(
        &self,
        _x: &DVector<f64>,
        _u: &DVector<f64>,
        lambda: &DVector<f64>,
    ) -> (DVector<f64>, DVector<f64>) {
        (&self.ad_t * lambda, &self.bd_t * lambda)
    }
}
