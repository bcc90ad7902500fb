use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{Scenario, SimTrace};
use crate::{Error, Result};

/// Half-width of the clinical band around the BIS target.
pub const BAND_HALF_WIDTH: f64 = 10.0;
/// Error level whose repeated crossing after settling counts as oscillation.
pub const OSCILLATION_THRESHOLD: f64 = 5.0;
/// How long the error must stay inside the band to count as settled.
pub const SETTLE_HOLD_MIN: f64 = 1.0;

const TIME_EPS: f64 = 1e-9;

/// Clinical performance of one closed-loop run. Quantities that never
/// materialised are `None` and serialize as `"not reached"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Time from the start until BIS first enters `bis_ref ± 10`.
    #[serde(with = "not_reached")]
    pub rise_time_min: Option<f64>,
    /// Undershoot below the target during induction, as a percentage of the
    /// commanded step from baseline to target.
    pub overshoot_pct: f64,
    #[serde(with = "not_reached")]
    pub min_bis_induction: Option<f64>,
    /// Share of maintenance samples inside the band, disturbance windows
    /// excluded.
    #[serde(with = "not_reached")]
    pub time_in_band_pct: Option<f64>,
    /// One entry per disturbance, in scenario order.
    #[serde(with = "not_reached_vec")]
    pub disturbance_settling_min: Vec<Option<f64>>,
    pub oscillation_flag: bool,
    /// `|BIS − bis_ref|` at the last sample.
    pub terminal_error: f64,
    /// Samples outside the band after the first entry, disturbance windows
    /// excluded.
    pub band_violations_after_rise: usize,
    /// Steps where the stopping criterion hit its iteration cap.
    pub criterion_misses: usize,
}

pub fn compute_metrics(trace: &SimTrace, scenario: &Scenario) -> Result<MetricsReport> {
    let rows = &trace.rows;
    let first = rows
        .first()
        .ok_or_else(|| Error::config("cannot compute metrics of an empty trace"))?;
    let t0 = first.time_min;
    let r = scenario.bis_ref;
    let err = |i: usize| (rows[i].measured_bis - r).abs();
    let active = |i: usize| scenario.disturbance_active(rows[i].time_min);
    let induction_end = scenario.bounds.induction_minutes;

    let rise_index = (0..rows.len()).find(|&i| err(i) <= BAND_HALF_WIDTH);
    let rise_time_min = rise_index.map(|i| rows[i].time_min - t0);

    let min_bis_induction = (0..rows.len())
        .filter(|&i| rows[i].time_min < induction_end - TIME_EPS && !active(i))
        .map(|i| rows[i].measured_bis)
        .reduce(f64::min);
    let step = trace.baseline_bis - r;
    let overshoot_pct = match min_bis_induction {
        Some(min) if step > 0.0 => (r - min).max(0.0) / step * 100.0,
        _ => 0.0,
    };

    let maintenance: Vec<usize> = (0..rows.len())
        .filter(|&i| rows[i].time_min >= induction_end - TIME_EPS && !active(i))
        .collect();
    let time_in_band_pct = (!maintenance.is_empty()).then(|| {
        let inside = maintenance
            .iter()
            .filter(|&&i| err(i) <= BAND_HALF_WIDTH)
            .count();
        inside as f64 / maintenance.len() as f64 * 100.0
    });

    let t_last = rows[rows.len() - 1].time_min;
    let mut disturbance_settling_min = Vec::with_capacity(scenario.disturbances.len());
    let mut oscillation_flag = false;
    for d in &scenario.disturbances {
        let end = d.end_min();
        let window_end = scenario
            .disturbances
            .iter()
            .map(|o| o.start_min)
            .filter(|&s| s > end + TIME_EPS)
            .fold(t_last + TIME_EPS, f64::min);
        let window: Vec<usize> = (0..rows.len())
            .filter(|&i| rows[i].time_min >= end - TIME_EPS && rows[i].time_min < window_end)
            .collect();
        let settled = window.iter().copied().find(|&i| {
            let t = rows[i].time_min;
            t + SETTLE_HOLD_MIN <= t_last + TIME_EPS
                && (i..rows.len())
                    .take_while(|&j| rows[j].time_min <= t + SETTLE_HOLD_MIN + TIME_EPS)
                    .all(|j| err(j) <= BAND_HALF_WIDTH)
        });
        disturbance_settling_min.push(settled.map(|i| rows[i].time_min - end));

        if let Some(s) = settled {
            let mut above = err(s) > OSCILLATION_THRESHOLD;
            let mut crossings = 0;
            for &i in window.iter().filter(|&&i| i > s && !active(i)) {
                let now = err(i) > OSCILLATION_THRESHOLD;
                if now && !above {
                    crossings += 1;
                }
                above = now;
            }
            oscillation_flag |= crossings > 1;
        }
    }

    let band_violations_after_rise = rise_index.map_or(0, |start| {
        (start..rows.len())
            .filter(|&i| !active(i) && err(i) > BAND_HALF_WIDTH)
            .count()
    });

    Ok(MetricsReport {
        rise_time_min,
        overshoot_pct,
        min_bis_induction,
        time_in_band_pct,
        disturbance_settling_min,
        oscillation_flag,
        terminal_error: err(rows.len() - 1),
        band_violations_after_rise,
        criterion_misses: rows
            .iter()
            .filter(|r| r.stop_criterion_met == Some(false))
            .count(),
    })
}

const NOT_REACHED: &str = "not reached";

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Reached {
    Value(f64),
    Marker(String),
}

impl From<Option<f64>> for Reached {
    fn from(v: Option<f64>) -> Self {
        match v {
            Some(x) => Reached::Value(x),
            None => Reached::Marker(NOT_REACHED.to_string()),
        }
    }
}

impl Reached {
    fn into_option<E: serde::de::Error>(self) -> Result<Option<f64>, E> {
        match self {
            Reached::Value(x) => Ok(Some(x)),
            Reached::Marker(s) if s == NOT_REACHED => Ok(None),
            Reached::Marker(s) => Err(E::custom(format!(
                "expected a number or \"{NOT_REACHED}\", got {s:?}"
            ))),
        }
    }
}

mod not_reached {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        Reached::from(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Reached::deserialize(d)?.into_option()
    }
}

mod not_reached_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Option<f64>], s: S) -> Result<S::Ok, S::Error> {
        v.iter()
            .map(|x| Reached::from(*x))
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Option<f64>>, D::Error> {
        Vec::<Reached>::deserialize(d)?
            .into_iter()
            .map(Reached::into_option)
            .collect()
    }
}
