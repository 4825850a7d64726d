//! Synthetic ground truth and dataset generation.
//!
//! The reference voltage is the SPMT voltage minus a polarization term that
//! lags the applied current:
//!
//! ```text
//! V_true = V_spmt* - dV
//! tau_e d(dV)/dt = -dV + p1 I + p2 I |I| + p3 I (1 - soc_bulk)
//! ```
//!
//! `V_spmt*` comes from the SPMT run with the truth's own cell parameters,
//! which equal the model's unless a `base` override is given.

mod build;
mod dataset;

pub use build::{
    build_datasets, build_one, load_dataset_dir, write_dataset_dir, DatasetSplit, DriveCycleSpec,
    LoadedDatasets, Manifest, ManifestEntry, PartSpec, SplitRole, SplitSpec, AMBIENT,
    MANIFEST_FILE,
};
pub use dataset::{Dataset, Record, RECORD_HEADER};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ParamError;
use crate::params::CellParameters;
use crate::spmt::Trace;

const DEFAULT_TRUTH_FILE: &str = include_str!("../../data/truth_default.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthParameters {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    /// Cell parameters of the reference SPMT; `None` reuses the model's.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<CellParameters>,
    /// Linear polarization coefficient (V/A).
    pub p1: f64,
    /// Quadratic polarization coefficient (V/A²).
    pub p2: f64,
    /// SoC-coupled polarization coefficient (V/A).
    pub p3: f64,
    /// Lag time constant (s).
    pub tau_e: f64,
}

impl Default for TruthParameters {
    fn default() -> Self {
        Self::from_json(DEFAULT_TRUTH_FILE).expect("bundled truth file is valid")
    }
}

impl TruthParameters {
    /// No polarization: the truth equals the SPMT.
    pub fn zero() -> Self {
        Self {
            note: None,
            base: None,
            p1: 0.0,
            p2: 0.0,
            p3: 0.0,
            tau_e: 30.0,
        }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if !(self.tau_e > 0.0 && self.tau_e.is_finite()) {
            return Err(ParamError::Invalid(format!(
                "tau_e must be positive, got {}",
                self.tau_e
            )));
        }
        for (name, v) in [("p1", self.p1), ("p2", self.p2), ("p3", self.p3)] {
            if !v.is_finite() {
                return Err(ParamError::Invalid(format!(
                    "{name} must be finite, got {v}"
                )));
            }
        }
        if let Some(base) = &self.base {
            base.validate()?;
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, ParamError> {
        let truth: TruthParameters = serde_json::from_str(text)?;
        truth.validate()?;
        Ok(truth)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ParamError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ParamError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("truth parameters serialize")
    }

    pub fn hash(&self) -> String {
        crate::hash::sha256_hex(self.to_json().as_bytes())
    }

    /// Cell parameters of the reference simulation.
    pub fn base_or<'a>(&'a self, model: &'a CellParameters) -> &'a CellParameters {
        self.base.as_ref().unwrap_or(model)
    }

    /// Copy of `model` with transport and kinetic coefficients scaled by
    /// `1 + fraction`, installed as the truth's base.
    pub fn with_perturbed_base(mut self, model: &CellParameters, fraction: f64) -> Self {
        let mut base = model.clone();
        for e in [&mut base.pos, &mut base.neg] {
            e.d_s_ref *= 1.0 + fraction;
            e.k_ref *= 1.0 + fraction;
        }
        self.base = Some(base);
        self
    }

    /// Forcing of the lag equation, i.e. the settled polarization.
    pub fn forcing(&self, current: f64, soc_bulk: f64) -> f64 {
        self.p1 * current + self.p2 * current * current.abs() + self.p3 * current * (1.0 - soc_bulk)
    }
}

/// Polarization `dV` at every row of `trace`, starting from rest. Between rows
/// the forcing is held at its value at the earlier row, which the exact
/// exponential update integrates without error.
pub fn polarization(trace: &Trace, truth: &TruthParameters) -> Vec<f64> {
    let mut out = Vec::with_capacity(trace.rows.len());
    let mut dv = 0.0;
    for (k, row) in trace.rows.iter().enumerate() {
        if k > 0 {
            let prev = &trace.rows[k - 1];
            let decay = (-(row.t - prev.t) / truth.tau_e).exp();
            let f = truth.forcing(prev.current, prev.output.soc_bulk);
            dv = dv * decay + (1.0 - decay) * f;
        }
        out.push(dv);
    }
    out
}

/// Reference voltage for every row of a trace simulated with the truth's base
/// parameters.
pub fn truth_voltage(trace: &Trace, truth: &TruthParameters) -> Vec<f64> {
    trace
        .rows
        .iter()
        .zip(polarization(trace, truth))
        .map(|(row, dv)| row.output.voltage - dv)
        .collect()
}
