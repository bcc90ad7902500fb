use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Interaction Hill-surface parameters.
///
/// `c50p` and `c50r` are expressed in the units of the respective effect-site
/// state (see the crate README on units).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdParams {
    pub c50p: f64,
    pub c50r: f64,
    pub e0: f64,
    pub emax: f64,
    pub eta: f64,
    pub beta: f64,
}

impl Default for PdParams {
    /// Nominal constants: C50 of 1.8 (propofol) and 12.5 (remifentanil),
    /// `E0 = Emax = 100`, slope 3.76, interaction 5.1.
    fn default() -> Self {
        Self {
            c50p: 1.8,
            c50r: 12.5,
            e0: 100.0,
            emax: 100.0,
            eta: 3.76,
            beta: 5.1,
        }
    }
}

impl PdParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("c50p", self.c50p),
            ("c50r", self.c50r),
            ("eta", self.eta),
            ("emax", self.emax),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!(
                    "pd.{name} must be positive, got {v}"
                )));
            }
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::config(format!(
                "pd.beta must be nonnegative, got {}",
                self.beta
            )));
        }
        if !(0.0..=100.0).contains(&self.e0) {
            return Err(Error::config(format!(
                "pd.e0 must lie in [0, 100], got {}",
                self.e0
            )));
        }
        Ok(())
    }

    fn potency(&self, ce_p: f64, ce_r: f64) -> (f64, f64, f64) {
        let a = ce_p / self.c50p;
        let b = ce_r / self.c50r;
        (a, b, a + b + self.beta * a * b)
    }

    /// BIS with negative concentrations clamped to zero. Used on estimates
    /// and predictions, which may dip below zero by rounding.
    pub(crate) fn bis_clamped(&self, ce_p: f64, ce_r: f64) -> f64 {
        let (_, _, u) = self.potency(ce_p.max(0.0), ce_r.max(0.0));
        let un = u.powf(self.eta);
        self.e0 - self.emax * un / (un + 1.0)
    }

    pub(crate) fn bis_gradient_clamped(&self, ce_p: f64, ce_r: f64) -> (f64, f64) {
        let (a, b, u) = self.potency(ce_p.max(0.0), ce_r.max(0.0));
        if u == 0.0 && self.eta > 1.0 {
            return (0.0, 0.0);
        }
        let un = u.powf(self.eta);
        // d/dU [U^η / (U^η + 1)] = η U^(η−1) / (U^η + 1)²
        let d_u = -self.emax * self.eta * u.powf(self.eta - 1.0) / ((un + 1.0) * (un + 1.0));
        (
            d_u * (1.0 + self.beta * b) / self.c50p,
            d_u * (1.0 + self.beta * a) / self.c50r,
        )
    }
}

fn check_concentrations(ce_p: f64, ce_r: f64) -> Result<()> {
    if !(ce_p >= 0.0 && ce_r >= 0.0) || !ce_p.is_finite() || !ce_r.is_finite() {
        return Err(Error::domain(format!(
            "effect-site concentrations must be finite and nonnegative, got ({ce_p}, {ce_r})"
        )));
    }
    Ok(())
}

/// `E0 − Emax · U^η / (U^η + 1)` with
/// `U = Cp/C50p + Cr/C50r + β · (Cp/C50p) · (Cr/C50r)`.
pub fn bis(ce_p: f64, ce_r: f64, pd: &PdParams) -> Result<f64> {
    check_concentrations(ce_p, ce_r)?;
    Ok(pd.bis_clamped(ce_p, ce_r))
}

/// `(∂BIS/∂Cp, ∂BIS/∂Cr)`; both are nonpositive.
pub fn bis_gradient(ce_p: f64, ce_r: f64, pd: &PdParams) -> Result<(f64, f64)> {
    check_concentrations(ce_p, ce_r)?;
    Ok(pd.bis_gradient_clamped(ce_p, ce_r))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn awake_and_half_effect() {
        let pd = PdParams::default();
        assert_eq!(bis(0.0, 0.0, &pd).unwrap(), 100.0);
        assert!((bis(pd.c50p, 0.0, &pd).unwrap() - 50.0).abs() <= 1e-12);
        assert!((bis(0.0, pd.c50r, &pd).unwrap() - 50.0).abs() <= 1e-12);
    }

    #[test]
    fn gradient_vanishes_when_drug_free() {
        assert_eq!(
            bis_gradient(0.0, 0.0, &PdParams::default()).unwrap(),
            (0.0, 0.0)
        );
    }

    #[test]
    fn domain_errors() {
        let pd = PdParams::default();
        assert!(matches!(bis(-0.1, 0.0, &pd), Err(Error::Domain(_))));
        assert!(bis_gradient(0.0, -1.0, &pd).is_err());
        assert!(bis(f64::NAN, 0.0, &pd).is_err());
    }

    #[test]
    fn validation() {
        assert!(PdParams::default().validate().is_ok());
        let pd = PdParams {
            e0: 120.0,
            ..PdParams::default()
        };
        assert!(pd.validate().is_err());
        let pd = PdParams {
            c50r: 0.0,
            ..PdParams::default()
        };
        assert!(pd.validate().is_err());
        let pd = PdParams {
            beta: -1.0,
            ..PdParams::default()
        };
        assert!(pd.validate().is_err());
    }
}
