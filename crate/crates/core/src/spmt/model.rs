use serde::{Deserialize, Serialize};

use super::diffusion::SphericalGrid;
use super::kinetics::{arrhenius, exchange_current_density, molar_flux, overpotential};
use super::thermal::{heat_generation, thermal_step};
use crate::error::SpmtError;
use crate::params::{CellParameters, Electrode, SolverSettings};
use crate::profile::CurrentProfile;

/// Dynamic state of the SPMT: radial concentrations of both particles
/// (centre first, surface last) and the lumped temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct SpmtState {
    pub c_pos: Vec<f64>,
    pub c_neg: Vec<f64>,
    pub temperature: f64,
    pub time: f64,
}

impl SpmtState {
    /// Both particles uniform at the stoichiometries of `soc`.
    pub fn uniform(params: &CellParameters, n_r: usize, soc: f64, temperature: f64) -> Self {
        Self {
            c_pos: vec![params.pos.stoichiometry(soc) * params.pos.c_s_max; n_r],
            c_neg: vec![params.neg.stoichiometry(soc) * params.neg.c_s_max; n_r],
            temperature,
            time: 0.0,
        }
    }

    pub fn concentration(&self, electrode: Electrode) -> &[f64] {
        match electrode {
            Electrode::Pos => &self.c_pos,
            Electrode::Neg => &self.c_neg,
        }
    }

    pub fn surface(&self, electrode: Electrode) -> f64 {
        *self
            .concentration(electrode)
            .last()
            .expect("grid has at least 3 nodes")
    }

    pub fn bulk(&self, electrode: Electrode) -> f64 {
        super::diffusion::bulk_concentration(self.concentration(electrode))
    }

    pub fn bulk_pos(&self) -> f64 {
        self.bulk(Electrode::Pos)
    }

    pub fn bulk_neg(&self) -> f64 {
        self.bulk(Electrode::Neg)
    }

    /// Open-circuit voltage at the bulk stoichiometries.
    pub fn bulk_ocv(&self, params: &CellParameters) -> f64 {
        params
            .pos
            .ocv_curve
            .eval(self.bulk_pos() / params.pos.c_s_max)
            - params
                .neg
                .ocv_curve
                .eval(self.bulk_neg() / params.neg.c_s_max)
    }
}

/// Instantaneous outputs of the model at one state and current.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpmtOutput {
    pub voltage: f64,
    pub soc_surf: f64,
    pub soc_bulk: f64,
    pub eta_pos: f64,
    pub eta_neg: f64,
    pub q_gen: f64,
    pub temperature: f64,
}

/// Surface and bulk SoC of the negative electrode: `(soc_surf, soc_bulk)`.
pub fn soc_pair(state: &SpmtState, params: &CellParameters) -> (f64, f64) {
    let c_max = params.neg.c_s_max;
    (
        state.surface(Electrode::Neg) / c_max,
        state.bulk(Electrode::Neg) / c_max,
    )
}

/// SoC seen from the positive electrode's bulk stoichiometry. Diagnostic only;
/// nothing downstream consumes it.
pub fn positive_soc(state: &SpmtState, params: &CellParameters) -> f64 {
    let pos = &params.pos;
    (state.bulk(Electrode::Pos) / pos.c_s_max - pos.theta_0) / (pos.theta_100 - pos.theta_0)
}

/// Film-resistance drop coefficient (Ω) of both electrodes.
pub fn film_resistance(params: &CellParameters) -> f64 {
    params.pos.r_f / (params.pos.a_s * params.pos.thickness)
        + params.neg.r_f / (params.neg.a_s * params.neg.thickness)
}

fn electrode_overpotential(
    state: &SpmtState,
    current: f64,
    electrode: Electrode,
    params: &CellParameters,
) -> Result<f64, SpmtError> {
    let e = params.electrode(electrode);
    let k = arrhenius(
        e.k_ref,
        e.e_k,
        params.t_ref,
        state.temperature,
        params.gas_constant,
    )?;
    let i0 = exchange_current_density(
        state.surface(electrode),
        k,
        e.c_s_max,
        params.c_e0,
        params.alpha_a,
        params.alpha_c,
    )
    .map_err(|err| err.at(electrode))?;
    let j = molar_flux(current, electrode, params);
    overpotential(
        j,
        i0,
        state.temperature,
        params.faraday,
        params.gas_constant,
    )
}

/// Terminal voltage and the quantities derived alongside it.
pub fn terminal_voltage(
    state: &SpmtState,
    current: f64,
    params: &CellParameters,
) -> Result<SpmtOutput, SpmtError> {
    let eta_pos = electrode_overpotential(state, current, Electrode::Pos, params)?;
    let eta_neg = electrode_overpotential(state, current, Electrode::Neg, params)?;
    let u_pos = params
        .pos
        .ocv_curve
        .eval(state.surface(Electrode::Pos) / params.pos.c_s_max);
    let u_neg = params
        .neg
        .ocv_curve
        .eval(state.surface(Electrode::Neg) / params.neg.c_s_max);
    let voltage = u_pos - u_neg + eta_pos - eta_neg - film_resistance(params) * current;
    let (soc_surf, soc_bulk) = soc_pair(state, params);
    Ok(SpmtOutput {
        voltage,
        soc_surf,
        soc_bulk,
        eta_pos,
        eta_neg,
        q_gen: heat_generation(state, current, voltage, params),
        temperature: state.temperature,
    })
}

/// Which edge of the voltage window was crossed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    Lower,
    Upper,
}

/// Why a simulated trace ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    Completed,
    /// The sample at `t` fell outside the window and was not recorded.
    VoltageCutoff {
        t: f64,
        voltage: f64,
        bound: Bound,
    },
    /// A concentration left `[0, c_s_max]` while producing the sample at `t`.
    Saturated {
        t: f64,
        electrode: Electrode,
        node: Option<usize>,
        value: f64,
    },
}

impl Termination {
    pub fn is_saturation(&self) -> bool {
        matches!(self, Termination::Saturated { .. })
    }

    /// One-line description used in trace metadata.
    pub fn describe(&self) -> String {
        match self {
            Termination::Completed => "completed".to_string(),
            Termination::VoltageCutoff { t, voltage, bound } => {
                let edge = match bound {
                    Bound::Lower => "v_min",
                    Bound::Upper => "v_max",
                };
                format!("voltage cutoff at t={t} s: V={voltage} crossed {edge}")
            }
            Termination::Saturated {
                t,
                electrode,
                node,
                value,
            } => match node {
                Some(node) => {
                    format!("saturation at t={t} s: {electrode} node {node} reached {value} mol/m3")
                }
                None => {
                    format!("saturation at t={t} s: {electrode} surface reached {value} mol/m3")
                }
            },
        }
    }
}

/// One recorded sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub current: f64,
    pub output: SpmtOutput,
}

/// Time series produced by [`Spmt::simulate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
    pub termination: Termination,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn voltages(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.output.voltage).collect()
    }
}

/// SPMT integrator bound to one parameter set and solver configuration.
#[derive(Debug, Clone)]
pub struct Spmt {
    params: CellParameters,
    settings: SolverSettings,
    grid: SphericalGrid,
}

impl Spmt {
    pub fn new(params: CellParameters, settings: SolverSettings) -> Result<Self, SpmtError> {
        params.validate()?;
        settings.validate()?;
        Ok(Self {
            grid: SphericalGrid::new(settings.n_r),
            params,
            settings,
        })
    }

    pub fn params(&self) -> &CellParameters {
        &self.params
    }

    pub fn settings(&self) -> SolverSettings {
        self.settings
    }

    pub fn initial_state(&self, soc0: f64, temperature: f64) -> Result<SpmtState, SpmtError> {
        if !(soc0 > 0.0 && soc0 < 1.0) {
            return Err(SpmtError::Input(format!(
                "initial SoC must lie in (0, 1), got {soc0}"
            )));
        }
        if !(temperature > 0.0) {
            return Err(SpmtError::Domain(temperature));
        }
        Ok(SpmtState::uniform(
            &self.params,
            self.settings.n_r,
            soc0,
            temperature,
        ))
    }

    pub fn output(&self, state: &SpmtState, current: f64) -> Result<SpmtOutput, SpmtError> {
        terminal_voltage(state, current, &self.params)
    }

    /// Advance `state` by one time step under `current`. `output` must be the
    /// output at the current state; its voltage drives the heat balance.
    /// Transport and kinetics use the temperature at the start of the step.
    pub fn step(
        &self,
        state: &mut SpmtState,
        current: f64,
        output: &SpmtOutput,
        t_amb: f64,
    ) -> Result<(), SpmtError> {
        let dt = self.settings.dt;
        let p = &self.params;
        let mut c_pos = state.c_pos.clone();
        let mut c_neg = state.c_neg.clone();
        for (electrode, c) in [(Electrode::Pos, &mut c_pos), (Electrode::Neg, &mut c_neg)] {
            let e = p.electrode(electrode);
            let d_s = arrhenius(e.d_s_ref, e.e_d, p.t_ref, state.temperature, p.gas_constant)?;
            let j = molar_flux(current, electrode, p);
            self.grid
                .step(c, d_s, j, dt, e.r_s, e.c_s_max)
                .map_err(|err| err.at(electrode))?;
        }
        let temperature = thermal_step(state, current, output.voltage, p, t_amb, dt);
        state.c_pos = c_pos;
        state.c_neg = c_neg;
        state.temperature = temperature;
        state.time += dt;
        Ok(())
    }

    /// Run from uniform particles at `soc0` until `t_end` or until the
    /// voltage leaves `[v_min, v_max]`.
    pub fn simulate(
        &self,
        soc0: f64,
        profile: &CurrentProfile,
        t0: f64,
        t_amb: f64,
        t_end: f64,
    ) -> Result<Trace, SpmtError> {
        if !(t_end >= 0.0) || t_end > profile.duration() {
            return Err(SpmtError::Input(format!(
                "profile covers [0, {}] s but t_end is {t_end} s",
                profile.duration()
            )));
        }
        let mut state = self.initial_state(soc0, t0)?;
        let dt = self.settings.dt;
        let steps = (t_end / dt).round() as usize;
        let mut rows = Vec::with_capacity(steps + 1);

        for k in 0..=steps {
            let t = k as f64 * dt;
            let current = profile.current_at(t);
            let output = match self.output(&state, current) {
                Ok(out) => out,
                Err(err) => return saturation_end(rows, t, err),
            };
            let bound = if output.voltage < self.params.v_min {
                Some(Bound::Lower)
            } else if output.voltage > self.params.v_max {
                Some(Bound::Upper)
            } else {
                None
            };
            if let Some(bound) = bound {
                return Ok(Trace {
                    rows,
                    termination: Termination::VoltageCutoff {
                        t,
                        voltage: output.voltage,
                        bound,
                    },
                });
            }
            rows.push(TraceRow { t, current, output });
            if k == steps {
                break;
            }
            if let Err(err) = self.step(&mut state, current, &output, t_amb) {
                return saturation_end(rows, t + dt, err);
            }
        }
        Ok(Trace {
            rows,
            termination: Termination::Completed,
        })
    }
}

fn saturation_end(rows: Vec<TraceRow>, t: f64, err: SpmtError) -> Result<Trace, SpmtError> {
    match err {
        SpmtError::Saturation {
            electrode,
            node,
            value,
            ..
        } => Ok(Trace {
            rows,
            termination: Termination::Saturated {
                t,
                electrode,
                node,
                value,
            },
        }),
        other => Err(other),
    }
}

/// Convenience wrapper around [`Spmt::simulate`].
pub fn simulate(
    params: &CellParameters,
    settings: SolverSettings,
    soc0: f64,
    profile: &CurrentProfile,
    t0: f64,
    t_amb: f64,
    t_end: f64,
) -> Result<Trace, SpmtError> {
    Spmt::new(params.clone(), settings)?.simulate(soc0, profile, t0, t_amb, t_end)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ParameterFile;

    fn params() -> CellParameters {
        ParameterFile::lco_graphite().cell
    }

    #[test]
    fn rest_voltage_is_the_ocv_difference() {
        let p = params();
        let state = SpmtState::uniform(&p, 20, 0.6, 298.15);
        let out = terminal_voltage(&state, 0.0, &p).unwrap();
        let theta_pos = p.pos.stoichiometry(0.6);
        let theta_neg = p.neg.stoichiometry(0.6);
        assert_eq!(
            out.voltage,
            p.pos.ocv_curve.eval(theta_pos) - p.neg.ocv_curve.eval(theta_neg)
        );
        assert_eq!(out.eta_pos, 0.0);
        assert_eq!(out.eta_neg, 0.0);
    }

    #[test]
    fn soc_pair_of_half_full_surface() {
        let p = params();
        let mut state = SpmtState::uniform(&p, 20, 0.5, 298.15);
        *state.c_neg.last_mut().unwrap() = p.neg.c_s_max / 2.0;
        assert_eq!(soc_pair(&state, &p).0, 0.5);
    }

    #[test]
    fn uniform_grid_has_equal_socs() {
        let p = params();
        let state = SpmtState::uniform(&p, 20, 0.37, 298.15);
        let (surf, bulk) = soc_pair(&state, &p);
        assert!((surf - bulk).abs() < 1e-15);
        assert!((positive_soc(&state, &p) - 0.37).abs() < 1e-3);
    }

    #[test]
    fn voltage_odd_part_is_kinetics_plus_film() {
        let p = params();
        let state = SpmtState::uniform(&p, 20, 0.5, 298.15);
        let i = 6.9;
        let plus = terminal_voltage(&state, i, &p).unwrap();
        let minus = terminal_voltage(&state, -i, &p).unwrap();
        let expected = 2.0 * plus.eta_pos - 2.0 * plus.eta_neg - 2.0 * film_resistance(&p) * i;
        assert!((plus.voltage - minus.voltage - expected).abs() < 1e-12);
    }

    #[test]
    fn voltage_decreases_with_discharge_current() {
        let p = params();
        let state = SpmtState::uniform(&p, 20, 0.5, 298.15);
        let h = 1e-4;
        for i in [-20.0, -2.3, 0.0, 2.3, 11.5, 23.0] {
            let up = terminal_voltage(&state, i + h, &p).unwrap().voltage;
            let down = terminal_voltage(&state, i - h, &p).unwrap().voltage;
            assert!((up - down) / (2.0 * h) < 0.0, "dV/dI at {i}");
        }
    }

    #[test]
    fn saturated_surface_is_an_error() {
        let p = params();
        let mut state = SpmtState::uniform(&p, 20, 0.5, 298.15);
        *state.c_neg.last_mut().unwrap() = 0.0;
        assert!(matches!(
            terminal_voltage(&state, 1.0, &p),
            Err(SpmtError::Saturation {
                electrode: Electrode::Neg,
                ..
            })
        ));
    }

    #[test]
    fn initial_soc_must_be_open_interval() {
        let spmt = Spmt::new(params(), SolverSettings::default()).unwrap();
        assert!(spmt.initial_state(0.0, 298.15).is_err());
        assert!(spmt.initial_state(1.0, 298.15).is_err());
        assert!(spmt.initial_state(0.5, 0.0).is_err());
    }
}
