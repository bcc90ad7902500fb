use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::pkpd::{INPUT_DIM, STATE_DIM, STATE_NAMES};
use crate::Result;

/// One sampling instant of a closed-loop run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub time_min: f64,
    pub plant_state: [f64; STATE_DIM],
    pub estimated_state: [f64; STATE_DIM],
    /// Propofol in mg/min, remifentanil in µg/min.
    pub applied_input: [f64; INPUT_DIM],
    pub measured_bis: f64,
    pub true_bis: f64,
    pub disturbance_offset: f64,
    pub solver_iterations: usize,
    pub solver_residual: f64,
    /// `None` outside stopping-criterion mode.
    pub stop_criterion_met: Option<bool>,
    pub stage_cost: f64,
}

impl TraceRow {
    pub fn bis_error(&self, bis_ref: f64) -> f64 {
        self.measured_bis - bis_ref
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub ts_min: f64,
    /// BIS of the drug-free simulated patient.
    pub baseline_bis: f64,
    pub rows: Vec<TraceRow>,
}

impl SimTrace {
    pub fn new(ts_min: f64, baseline_bis: f64) -> Self {
        Self {
            ts_min,
            baseline_bis,
            rows: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    /// Column names of [`SimTrace::write_csv`], in order.
    pub fn csv_header() -> Vec<String> {
        let mut h = vec!["time_min".to_string()];
        h.extend(STATE_NAMES.iter().map(|s| format!("x_{s}")));
        h.extend(STATE_NAMES.iter().map(|s| format!("xhat_{s}")));
        h.extend(
            [
                "u_propofol",
                "u_remifentanil",
                "measured_bis",
                "true_bis",
                "disturbance_offset",
                "solver_iterations",
                "solver_residual",
                "stop_criterion_met",
                "stage_cost",
            ]
            .map(String::from),
        );
        h
    }

    pub fn csv_record(row: &TraceRow) -> Vec<String> {
        let mut r = vec![row.time_min.to_string()];
        r.extend(row.plant_state.iter().map(f64::to_string));
        r.extend(row.estimated_state.iter().map(f64::to_string));
        r.extend(row.applied_input.iter().map(f64::to_string));
        r.push(row.measured_bis.to_string());
        r.push(row.true_bis.to_string());
        r.push(row.disturbance_offset.to_string());
        r.push(row.solver_iterations.to_string());
        r.push(row.solver_residual.to_string());
        r.push(
            row.stop_criterion_met
                .map(|b| b.to_string())
                .unwrap_or_default(),
        );
        r.push(row.stage_cost.to_string());
        r
    }

    pub fn write_csv_to<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(Self::csv_header())?;
        for row in &self.rows {
            w.write_record(Self::csv_record(row))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv_to(std::io::BufWriter::new(file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_matches_record_width() {
        let row = TraceRow {
            time_min: 0.0,
            plant_state: [0.0; STATE_DIM],
            estimated_state: [0.0; STATE_DIM],
            applied_input: [1.0, 2.0],
            measured_bis: 100.0,
            true_bis: 100.0,
            disturbance_offset: 0.0,
            solver_iterations: 50,
            solver_residual: 0.5,
            stop_criterion_met: None,
            stage_cost: 1.0,
        };
        assert_eq!(
            SimTrace::csv_header().len(),
            SimTrace::csv_record(&row).len()
        );
        assert_eq!(SimTrace::csv_header().len(), 1 + 16 + 9);
    }
}
