//! Lumped energy balance.
//!
//! ```text
//! rho_avg c_p dT/dt = q_gen - h_cell (T - T_amb)
//! q_gen = I (U_bulk - V) - I T dU_bulk/dT
//! ```
//!
//! `U_bulk` is the open-circuit voltage at the bulk stoichiometries. With the
//! discharge-positive current used throughout the crate, the ohmic part
//! `I (U_bulk - V)` is non-negative for either direction of current.

use super::model::SpmtState;
use crate::params::CellParameters;

/// Largest temperature change taken in one explicit substep (K).
pub const MAX_SUBSTEP_DELTA_T: f64 = 0.5;

/// Heat generation split into a temperature-independent part and a
/// coefficient multiplying `T`, so substeps can refresh the entropic term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatSource {
    /// `I (U_bulk - V)` in W.
    pub ohmic: f64,
    /// `-I dU_bulk/dT` in W/K.
    pub entropic_per_kelvin: f64,
}

impl HeatSource {
    pub fn new(state: &SpmtState, current: f64, voltage: f64, params: &CellParameters) -> Self {
        let theta_pos = state.bulk_pos() / params.pos.c_s_max;
        let theta_neg = state.bulk_neg() / params.neg.c_s_max;
        let ocv = params.pos.ocv_curve.eval(theta_pos) - params.neg.ocv_curve.eval(theta_neg);
        let docv_dt =
            params.pos.entropy_curve.eval(theta_pos) - params.neg.entropy_curve.eval(theta_neg);
        Self {
            ohmic: current * (ocv - voltage),
            entropic_per_kelvin: -current * docv_dt,
        }
    }

    pub fn at(&self, temperature: f64) -> f64 {
        self.ohmic + self.entropic_per_kelvin * temperature
    }
}

/// Heat generation rate (W) at the state's temperature.
pub fn heat_generation(
    state: &SpmtState,
    current: f64,
    voltage: f64,
    params: &CellParameters,
) -> f64 {
    HeatSource::new(state, current, voltage, params).at(state.temperature)
}

fn rate(source: &HeatSource, temperature: f64, t_amb: f64, params: &CellParameters) -> f64 {
    (source.at(temperature) - params.h_cell * (temperature - t_amb)) / (params.rho_avg * params.c_p)
}

/// Explicit Euler update of the lumped temperature over `dt`, split into
/// equal substeps whenever a single step would move `T` by more than
/// [`MAX_SUBSTEP_DELTA_T`].
pub fn thermal_step(
    state: &SpmtState,
    current: f64,
    voltage: f64,
    params: &CellParameters,
    t_amb: f64,
    dt: f64,
) -> f64 {
    let source = HeatSource::new(state, current, voltage, params);
    let mut temperature = state.temperature;
    let first = dt * rate(&source, temperature, t_amb, params);
    let substeps = (first.abs() / MAX_SUBSTEP_DELTA_T).ceil().max(1.0) as usize;
    let h = dt / substeps as f64;
    for _ in 0..substeps {
        temperature += h * rate(&source, temperature, t_amb, params);
    }
    temperature
}
