//! Reaction kinetics and temperature dependence of the SPMT.

use crate::error::SpmtError;
use crate::params::{CellParameters, Electrode};

/// Surface concentration outside the open interval `(0, c_s_max)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutOfRange {
    pub node: Option<usize>,
    pub value: f64,
    pub c_max: f64,
}

impl OutOfRange {
    pub fn at(self, electrode: Electrode) -> SpmtError {
        SpmtError::Saturation {
            electrode,
            node: self.node,
            value: self.value,
            c_max: self.c_max,
        }
    }
}

/// Arrhenius correction `psi_ref * exp(E/R * (1/T_ref - 1/T))`.
pub fn arrhenius(
    psi_ref: f64,
    activation_energy: f64,
    t_ref: f64,
    temperature: f64,
    gas_constant: f64,
) -> Result<f64, SpmtError> {
    if !(temperature > 0.0) {
        return Err(SpmtError::Domain(temperature));
    }
    if !(t_ref > 0.0) {
        return Err(SpmtError::Domain(t_ref));
    }
    if temperature == t_ref {
        return Ok(psi_ref);
    }
    Ok(psi_ref * ((activation_energy / gas_constant) * (1.0 / t_ref - 1.0 / temperature)).exp())
}

/// Pore-wall molar flux at the particle surface (mol/m²/s). Discharge current is
/// positive, so lithium leaves the negative particle and enters the positive one.
pub fn molar_flux(current: f64, electrode: Electrode, params: &CellParameters) -> f64 {
    let e = params.electrode(electrode);
    let magnitude = current / (e.a_s * params.faraday * params.area * e.thickness);
    match electrode {
        Electrode::Pos => -magnitude,
        Electrode::Neg => magnitude,
    }
}

/// Exchange current density (A/m²) for a surface concentration strictly inside
/// `(0, c_s_max)`. `k` must already be corrected to the current temperature.
pub fn exchange_current_density(
    c_ss: f64,
    k: f64,
    c_s_max: f64,
    c_e0: f64,
    alpha_a: f64,
    alpha_c: f64,
) -> Result<f64, OutOfRange> {
    if !(c_ss > 0.0 && c_ss < c_s_max) {
        return Err(OutOfRange {
            node: None,
            value: c_ss,
            c_max: c_s_max,
        });
    }
    Ok(k * c_e0.powf(alpha_a) * c_ss.powf(alpha_c) * (c_s_max - c_ss).powf(alpha_a))
}

/// Overpotential from the inverted Butler-Volmer relation with symmetric
/// transfer coefficients.
pub fn overpotential(
    j_n: f64,
    i0: f64,
    temperature: f64,
    faraday: f64,
    gas_constant: f64,
) -> Result<f64, SpmtError> {
    if !(i0 > 0.0) {
        return Err(SpmtError::DegenerateKinetics(i0));
    }
    Ok(2.0 * gas_constant * temperature / faraday * (faraday * j_n / (2.0 * i0)).asinh())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ParameterFile;
    use proptest::prelude::*;

    #[test]
    fn arrhenius_is_identity_at_reference() {
        assert_eq!(
            arrhenius(2e-14, 5000.0, 298.15, 298.15, 8.314).unwrap(),
            2e-14
        );
    }

    #[test]
    fn arrhenius_without_activation_energy_is_flat() {
        assert_eq!(arrhenius(1.0, 0.0, 298.15, 350.0, 8.314).unwrap(), 1.0);
    }

    #[test]
    fn arrhenius_matches_high_precision_value() {
        // exp((20000/8.314)(1/298.15 - 1/310)) evaluated with 30-digit arithmetic
        let reference = 2.722_543_825_306_62e-14;
        let got = arrhenius(2e-14, 20000.0, 298.15, 310.0, 8.314).unwrap();
        assert!((got - reference).abs() / reference < 1e-13, "{got}");
    }

    #[test]
    fn arrhenius_rejects_non_positive_temperature() {
        assert!(matches!(
            arrhenius(1.0, 1.0, 298.15, 0.0, 8.314),
            Err(SpmtError::Domain(_))
        ));
        assert!(arrhenius(1.0, 1.0, 298.15, -5.0, 8.314).is_err());
    }

    #[test]
    fn molar_flux_signs_and_scale() {
        let mut params = ParameterFile::lco_graphite().cell;
        assert_eq!(molar_flux(0.0, Electrode::Neg, &params), 0.0);
        assert_eq!(molar_flux(0.0, Electrode::Pos, &params), 0.0);

        params.area = 1.0;
        params.faraday = 1.0;
        params.neg.a_s = 1.0;
        params.neg.thickness = 1.0;
        assert_eq!(molar_flux(1.0, Electrode::Neg, &params), 1.0);

        let mut params = ParameterFile::lco_graphite().cell;
        params.pos.a_s = 1.8e5;
        params.faraday = 96487.0;
        params.area = 1.0;
        params.pos.thickness = 1e-4;
        let expected = -1.324_300_452_680_441_7e-6;
        let got = molar_flux(2.3, Electrode::Pos, &params);
        assert!((got - expected).abs() / expected.abs() < 1e-14, "{got}");
    }

    #[test]
    fn exchange_current_density_values() {
        let i0 = exchange_current_density(0.25, 1.0, 1.0, 1.0, 0.5, 0.5).unwrap();
        assert!((i0 - 0.433_012_701_892_219_3).abs() < 1e-15);
        // vanishes towards both ends of the stoichiometry range
        let near_full = exchange_current_density(1.0 - 1e-12, 1.0, 1.0, 1.0, 0.5, 0.5).unwrap();
        let near_empty = exchange_current_density(1e-12, 1.0, 1.0, 1.0, 0.5, 0.5).unwrap();
        assert!(near_full < 1e-5 && near_empty < 1e-5);
    }

    #[test]
    fn exchange_current_density_rejects_saturated_surface() {
        assert!(exchange_current_density(0.0, 1.0, 1.0, 1.0, 0.5, 0.5).is_err());
        assert!(exchange_current_density(1.0, 1.0, 1.0, 1.0, 0.5, 0.5).is_err());
        assert!(exchange_current_density(-0.1, 1.0, 1.0, 1.0, 0.5, 0.5).is_err());
    }

    #[test]
    fn overpotential_values() {
        assert_eq!(
            overpotential(0.0, 1.0, 298.15, 96487.0, 8.314).unwrap(),
            0.0
        );
        // F j / (2 i0) = 1
        let i0 = 2.0;
        let j = 2.0 * i0 / 96487.0;
        let eta = overpotential(j, i0, 298.15, 96487.0, 8.314).unwrap();
        assert!((eta - 0.045_286_218_490_357_36).abs() < 1e-15, "{eta}");
    }

    #[test]
    fn overpotential_rejects_degenerate_kinetics() {
        assert!(matches!(
            overpotential(1.0, 0.0, 298.15, 96487.0, 8.314),
            Err(SpmtError::DegenerateKinetics(_))
        ));
    }

    proptest! {
        #[test]
        fn overpotential_is_odd(j in -1e-2f64..1e-2, i0 in 1e-3f64..50.0, t in 250.0f64..350.0) {
            let plus = overpotential(j, i0, t, 96487.0, 8.314).unwrap();
            let minus = overpotential(-j, i0, t, 96487.0, 8.314).unwrap();
            prop_assert_eq!(plus, -minus);
        }

        #[test]
        fn arrhenius_identity_at_reference(psi in 1e-20f64..1e3, e in 0.0f64..1e5, t_ref in 200.0f64..400.0) {
            prop_assert_eq!(arrhenius(psi, e, t_ref, t_ref, 8.314).unwrap(), psi);
        }
    }
}
