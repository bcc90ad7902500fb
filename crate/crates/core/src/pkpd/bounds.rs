use serde::{Deserialize, Serialize};

use crate::model::InputBox;
use crate::{Error, Result};

/// Per-kilogram infusion ceilings: propofol in mg/(kg·min), remifentanil in
/// µg/(kg·min).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InfusionLimits {
    pub propofol: f64,
    pub remifentanil: f64,
}

/// Time-varying input ceilings: a high-infusion induction phase followed by
/// maintenance. Lower bounds are zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputBoundsSchedule {
    pub induction_minutes: f64,
    pub induction: InfusionLimits,
    pub maintenance: InfusionLimits,
}

impl Default for InputBoundsSchedule {
    fn default() -> Self {
        Self {
            induction_minutes: 10.0,
            induction: InfusionLimits {
                propofol: 4.0,
                remifentanil: 0.36,
            },
            maintenance: InfusionLimits {
                propofol: 0.8,
                remifentanil: 0.07,
            },
        }
    }
}

impl InputBoundsSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.induction_minutes >= 0.0 && self.induction_minutes.is_finite()) {
            return Err(Error::config("induction_minutes must be nonnegative"));
        }
        let all = [
            self.induction.propofol,
            self.induction.remifentanil,
            self.maintenance.propofol,
            self.maintenance.remifentanil,
        ];
        if all.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::config("infusion limits must be nonnegative"));
        }
        if self.maintenance.propofol > self.induction.propofol
            || self.maintenance.remifentanil > self.induction.remifentanil
        {
            return Err(Error::config(
                "maintenance limits must not exceed induction limits",
            ));
        }
        Ok(())
    }

    /// Limits in force at `t_min`; the induction phase is the half-open
    /// interval `[0, induction_minutes)`.
    pub fn limits_at(&self, t_min: f64) -> InfusionLimits {
        if t_min < self.induction_minutes {
            self.induction
        } else {
            self.maintenance
        }
    }

    /// Absolute input box `[0, limit·weight]` in mg/min and µg/min.
    pub fn bounds_at(&self, t_min: f64, weight_kg: f64) -> InputBox {
        let l = self.limits_at(t_min);
        InputBox::from_slices(
            &[0.0, 0.0],
            &[l.propofol * weight_kg, l.remifentanil * weight_kg],
        )
        .expect("validated limits are nonnegative")
    }
}
