//! Cell parameters, tabulated electrode curves and solver settings.
//!
//! Everything physical is loaded from a JSON parameter file. The only values
//! with built-in defaults are the Faraday and gas constants. A substitute
//! LCO/graphite set ships with the crate, see [`ParameterFile::lco_graphite`].

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ParamError;

pub const FARADAY: f64 = 96487.0;
pub const GAS_CONSTANT: f64 = 8.314;

const DEFAULT_PARAMETER_FILE: &str = include_str!("../data/lco_graphite.json");

fn default_faraday() -> f64 {
    FARADAY
}

fn default_gas_constant() -> f64 {
    GAS_CONSTANT
}

/// A piecewise-linear curve over stoichiometry, stored as `(theta, value)`
/// pairs. Queries outside the tabulated range clamp to the end values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct Curve {
    theta: Vec<f64>,
    value: Vec<f64>,
}

impl Curve {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, ParamError> {
        if points.is_empty() {
            return Err(ParamError::Curve("curve has no points".into()));
        }
        let mut theta = Vec::with_capacity(points.len());
        let mut value = Vec::with_capacity(points.len());
        for (x, y) in points {
            if !x.is_finite() || !y.is_finite() {
                return Err(ParamError::Curve(format!("non-finite point ({x}, {y})")));
            }
            if let Some(&prev) = theta.last() {
                if x <= prev {
                    return Err(ParamError::Curve(format!(
                        "abscissae must be strictly increasing ({prev} then {x})"
                    )));
                }
            }
            theta.push(x);
            value.push(y);
        }
        Ok(Self { theta, value })
    }

    /// A curve that is `value` everywhere.
    pub fn constant(value: f64) -> Self {
        Self {
            theta: vec![0.0],
            value: vec![value],
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.theta.len();
        if n == 1 || x <= self.theta[0] {
            return self.value[0];
        }
        if x >= self.theta[n - 1] {
            return self.value[n - 1];
        }
        // first index with theta > x; x is strictly inside the table here
        let hi = self.theta.partition_point(|&t| t <= x);
        let lo = hi - 1;
        let w = (x - self.theta[lo]) / (self.theta[hi] - self.theta[lo]);
        self.value[lo] + w * (self.value[hi] - self.value[lo])
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.theta.iter().copied().zip(self.value.iter().copied())
    }
}

impl TryFrom<Vec<(f64, f64)>> for Curve {
    type Error = ParamError;

    fn try_from(points: Vec<(f64, f64)>) -> Result<Self, Self::Error> {
        Curve::new(points)
    }
}

impl From<Curve> for Vec<(f64, f64)> {
    fn from(curve: Curve) -> Self {
        curve.points().collect()
    }
}

/// Which particle of the cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Electrode {
    Pos,
    Neg,
}

impl std::fmt::Display for Electrode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Electrode::Pos => f.write_str("positive"),
            Electrode::Neg => f.write_str("negative"),
        }
    }
}

/// Per-electrode coefficients. Transport and kinetic coefficients are given at
/// the reference temperature and corrected with the Arrhenius law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElectrodeParameters {
    /// Solid diffusion coefficient at `t_ref` (m²/s).
    pub d_s_ref: f64,
    /// Reaction rate constant at `t_ref`, scaled so that the exchange current
    /// density comes out in A/m².
    pub k_ref: f64,
    /// Particle radius (m).
    pub r_s: f64,
    /// Specific interfacial area (1/m).
    pub a_s: f64,
    /// Electrode thickness (m).
    pub thickness: f64,
    /// Maximum solid concentration (mol/m³).
    pub c_s_max: f64,
    /// SEI film resistance. It enters the terminal voltage as
    /// `r_f / (a_s * thickness) * I`, so it is expressed in Ω here.
    pub r_f: f64,
    /// Activation energy for diffusion (J/mol).
    pub e_d: f64,
    /// Activation energy for kinetics (J/mol).
    pub e_k: f64,
    /// Stoichiometry at 0 % state of charge.
    pub theta_0: f64,
    /// Stoichiometry at 100 % state of charge.
    pub theta_100: f64,
    /// Equilibrium potential U(θ) in V.
    pub ocv_curve: Curve,
    /// Entropic coefficient ∂U/∂T(θ) in V/K.
    pub entropy_curve: Curve,
}

impl ElectrodeParameters {
    /// Active-material volume fraction implied by `a_s = 3 ε / R_s`.
    pub fn solid_fraction(&self) -> f64 {
        self.a_s * self.r_s / 3.0
    }

    /// Stoichiometry at a given state of charge, linear between the endpoints.
    pub fn stoichiometry(&self, soc: f64) -> f64 {
        self.theta_0 + soc * (self.theta_100 - self.theta_0)
    }

    /// Lithium stored per unit electrode area per unit stoichiometry (mol/m²).
    fn lithium_per_theta(&self) -> f64 {
        self.c_s_max * self.solid_fraction() * self.thickness
    }

    fn validate(&self, which: Electrode) -> Result<(), ParamError> {
        let positive = [
            ("d_s_ref", self.d_s_ref),
            ("k_ref", self.k_ref),
            ("r_s", self.r_s),
            ("a_s", self.a_s),
            ("thickness", self.thickness),
            ("c_s_max", self.c_s_max),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ParamError::Invalid(format!(
                    "{which} electrode: {name} must be positive, got {value}"
                )));
            }
        }
        for (name, value) in [("r_f", self.r_f), ("e_d", self.e_d), ("e_k", self.e_k)] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(ParamError::Invalid(format!(
                    "{which} electrode: {name} must be non-negative, got {value}"
                )));
            }
        }
        for (name, value) in [("theta_0", self.theta_0), ("theta_100", self.theta_100)] {
            if !(value > 0.0 && value < 1.0) {
                return Err(ParamError::Invalid(format!(
                    "{which} electrode: {name} must lie in (0, 1), got {value}"
                )));
            }
        }
        if self.theta_0 == self.theta_100 {
            return Err(ParamError::Invalid(format!(
                "{which} electrode: stoichiometry endpoints coincide"
            )));
        }
        Ok(())
    }
}

/// Whole-cell parameters of the SPMT.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellParameters {
    #[serde(default = "default_faraday")]
    pub faraday: f64,
    #[serde(default = "default_gas_constant")]
    pub gas_constant: f64,
    /// Electrode surface area (m²).
    pub area: f64,
    /// Constant electrolyte concentration (mol/m³).
    pub c_e0: f64,
    pub alpha_a: f64,
    pub alpha_c: f64,
    /// Bulk density term of the lumped energy balance. The balance is written
    /// for the whole cell with `h_cell` in W/K, so `rho_avg * c_p` is the
    /// cell heat capacity in J/K.
    pub rho_avg: f64,
    pub c_p: f64,
    /// Lumped convective coefficient (W/K), no separate area factor.
    pub h_cell: f64,
    /// Arrhenius reference temperature (K).
    pub t_ref: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub pos: ElectrodeParameters,
    pub neg: ElectrodeParameters,
}

impl CellParameters {
    pub fn electrode(&self, which: Electrode) -> &ElectrodeParameters {
        match which {
            Electrode::Pos => &self.pos,
            Electrode::Neg => &self.neg,
        }
    }

    pub fn electrode_mut(&mut self, which: Electrode) -> &mut ElectrodeParameters {
        match which {
            Electrode::Pos => &mut self.pos,
            Electrode::Neg => &mut self.neg,
        }
    }

    /// Capacity between 0 % and 100 % SoC of the negative electrode (Ah).
    pub fn capacity_ah(&self) -> f64 {
        let neg = &self.neg;
        (neg.theta_100 - neg.theta_0).abs() * neg.lithium_per_theta() * self.area * self.faraday
            / 3600.0
    }

    /// Relative mismatch between the lithium each electrode exchanges over the
    /// full SoC window. Zero for perfectly matched endpoints.
    pub fn lithium_mismatch(&self) -> f64 {
        let neg = (self.neg.theta_100 - self.neg.theta_0).abs() * self.neg.lithium_per_theta();
        let pos = (self.pos.theta_100 - self.pos.theta_0).abs() * self.pos.lithium_per_theta();
        (neg - pos).abs() / neg
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        let positive = [
            ("faraday", self.faraday),
            ("gas_constant", self.gas_constant),
            ("area", self.area),
            ("c_e0", self.c_e0),
            ("rho_avg", self.rho_avg),
            ("c_p", self.c_p),
            ("t_ref", self.t_ref),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ParamError::Invalid(format!(
                    "{name} must be positive, got {value}"
                )));
            }
        }
        if !(self.h_cell >= 0.0 && self.h_cell.is_finite()) {
            return Err(ParamError::Invalid(format!(
                "h_cell must be non-negative, got {}",
                self.h_cell
            )));
        }
        // the closed-form overpotential only holds for symmetric transfer
        if self.alpha_a != 0.5 || self.alpha_c != 0.5 {
            return Err(ParamError::Invalid(format!(
                "transfer coefficients must be 0.5/0.5 for the asinh overpotential, got {}/{}",
                self.alpha_a, self.alpha_c
            )));
        }
        if !(self.v_min < self.v_max) {
            return Err(ParamError::Invalid(format!(
                "voltage window is empty: v_min {} >= v_max {}",
                self.v_min, self.v_max
            )));
        }
        self.pos.validate(Electrode::Pos)?;
        self.neg.validate(Electrode::Neg)?;
        Ok(())
    }
}

/// Numerical settings for the SPMT integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    /// Radial nodes per particle.
    pub n_r: usize,
    /// Time step (s).
    pub dt: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { n_r: 20, dt: 1.0 }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<(), ParamError> {
        if self.n_r < 3 {
            return Err(ParamError::Invalid(format!(
                "n_r must be at least 3, got {}",
                self.n_r
            )));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(ParamError::Invalid(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        Ok(())
    }
}

/// On-disk parameter file: cell parameters plus solver settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub cell: CellParameters,
    #[serde(default)]
    pub solver: SolverSettings,
}

impl ParameterFile {
    /// The bundled substitute LCO/graphite set.
    pub fn lco_graphite() -> Self {
        // the bundled file is covered by tests, so a parse failure is a build defect
        Self::from_json(DEFAULT_PARAMETER_FILE).expect("bundled parameter file is valid")
    }

    pub fn from_json(text: &str) -> Result<Self, ParamError> {
        let file: ParameterFile = serde_json::from_str(text)?;
        file.cell.validate()?;
        file.solver.validate()?;
        Ok(file)
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
        serde_json::to_string_pretty(self).expect("parameter file serializes")
    }

    /// Hash of the canonical serialized form.
    pub fn hash(&self) -> String {
        crate::hash::sha256_hex(self.to_json().as_bytes())
    }
}

/// The bundled JSON text, byte for byte.
pub fn default_parameter_json() -> &'static str {
    DEFAULT_PARAMETER_FILE
}
