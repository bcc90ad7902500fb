//! Two-drug anesthesia patient: propofol and remifentanil PK compartments,
//! zero-order-hold discretization and the BIS interaction surface.
//!
//! State layout (8 entries): `[p1, p2, p3, p_e, r1, r2, r3, r_e]`. The first
//! three entries of each drug are the central and two peripheral
//! compartments; the fourth is the effect-site concentration that drives the
//! pharmacodynamics. Inputs are `[u_p, u_r]` in mg/min and µg/min.

mod bounds;
mod cost;
mod discretize;
mod patient;
mod pd;
mod rates;

pub use bounds::{InfusionLimits, InputBoundsSchedule};
pub use cost::AnesthesiaCost;
pub use discretize::discretize;
pub use patient::{patient_system, PatientFile, PatientModel, PatientSystem};
pub use pd::{bis, bis_gradient, PdParams};
pub use rates::{build_pk_matrices, DrugRates, PkRates};

pub const STATE_DIM: usize = 8;
pub const INPUT_DIM: usize = 2;
/// Index of the propofol effect-site concentration.
pub const EFFECT_P: usize = 3;
/// Index of the remifentanil effect-site concentration.
pub const EFFECT_R: usize = 7;

/// Column names of the state vector, in order.
pub const STATE_NAMES: [&str; STATE_DIM] = ["p1", "p2", "p3", "pe", "r1", "r2", "r3", "re"];
