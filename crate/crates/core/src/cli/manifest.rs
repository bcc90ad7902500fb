use std::path::{Path, PathBuf};

use serde_json::Value;

use super::CliError;
use crate::pkpd::{PatientFile, PatientModel};
use crate::sim::Scenario;

/// The patient shipped with the crate, used when no `--patient` is given.
pub const DEFAULT_PATIENT_JSON: &str = include_str!("../../data/patient_nominal.json");

/// Everything a command needs to know about its inputs and outputs.
#[derive(Debug, Clone, Default)]
pub struct RunManifest {
    /// Patient file; the shipped nominal patient when `None`.
    pub patient_path: Option<PathBuf>,
    /// Scenario file; [`Scenario::default`] when `None`.
    pub scenario_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    /// `key=value` pairs applied to the scenario, `key` a dotted path.
    pub overrides: Vec<String>,
    /// Replaces the scenario's seed.
    pub seed: Option<u64>,
}

impl RunManifest {
    pub fn new(output_dir: impl Into<PathBuf>) -> Self {
        Self {
            output_dir: output_dir.into(),
            ..Self::default()
        }
    }

    pub fn load_patient_file(&self) -> Result<PatientFile, CliError> {
        match &self.patient_path {
            Some(path) => {
                require_exists(path, "patient")?;
                Ok(PatientFile::load(path)?)
            }
            None => {
                let file: PatientFile =
                    serde_json::from_str(DEFAULT_PATIENT_JSON).map_err(|e| {
                        CliError::config(format!("shipped patient file is invalid: {e}"))
                    })?;
                file.validate()?;
                Ok(file)
            }
        }
    }

    /// The scenario with file defaults filled in, overrides applied and the
    /// seed replaced.
    pub fn resolve_scenario(&self) -> Result<Scenario, CliError> {
        let base = match &self.scenario_path {
            Some(path) => {
                require_exists(path, "scenario")?;
                Scenario::load(path)?
            }
            None => Scenario::default(),
        };
        let mut value = serde_json::to_value(&base)
            .map_err(|e| CliError::config(format!("cannot serialize scenario: {e}")))?;
        apply_overrides(&mut value, &self.overrides)?;
        let mut scenario: Scenario = serde_json::from_value(value)
            .map_err(|e| CliError::config(format!("scenario invalid after overrides: {e}")))?;
        if let Some(seed) = self.seed {
            scenario.seed = seed;
        }
        scenario.validate()?;
        Ok(scenario)
    }

    /// Patient file, model discretized at the scenario's sampling time, and
    /// scenario.
    pub fn resolve(&self) -> Result<(PatientFile, PatientModel, Scenario), CliError> {
        let file = self.load_patient_file()?;
        let scenario = self.resolve_scenario()?;
        let model = PatientModel::from_file(&file, scenario.ts_min)?;
        Ok((file, model, scenario))
    }
}

fn require_exists(path: &Path, what: &str) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::config(format!(
            "{what} file not found: {}",
            path.display()
        )))
    }
}

/// Applies `key=value` overrides to a JSON document.
///
/// `key` is a dotted path whose every segment must already exist (array
/// elements by index). `value` is parsed as JSON, falling back to a plain
/// string.
pub fn apply_overrides(doc: &mut Value, overrides: &[String]) -> Result<(), CliError> {
    for item in overrides {
        let (key, raw) = item.split_once('=').ok_or_else(|| {
            CliError::config(format!("override {item:?} is not of the form key=value"))
        })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(CliError::config(format!(
                "override {item:?} has an empty key"
            )));
        }
        let mut node = &mut *doc;
        for segment in key.split('.') {
            node = match node {
                Value::Object(map) => map.get_mut(segment),
                Value::Array(items) => segment.parse::<usize>().ok().and_then(|i| items.get_mut(i)),
                _ => None,
            }
            .ok_or_else(|| {
                CliError::config(format!(
                    "override key {key:?} does not exist (at {segment:?})"
                ))
            })?;
        }
        *node = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.to_string()));
    }
    Ok(())
}
