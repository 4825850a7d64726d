//! Single particle model with lumped thermal dynamics (SPMT).
//!
//! Each electrode is one spherical particle with Fickian diffusion, the
//! reaction at its surface follows Butler-Volmer kinetics, and a single
//! temperature couples back into transport and kinetics through the
//! Arrhenius law. The electrolyte is not modelled.

pub mod diffusion;
pub mod kinetics;
mod model;
pub mod thermal;
mod trace_io;

pub use diffusion::{bulk_concentration, diffusion_step, SphericalGrid};
pub use kinetics::{arrhenius, exchange_current_density, molar_flux, overpotential};
pub use model::{
    film_resistance, positive_soc, simulate, soc_pair, terminal_voltage, Bound, Spmt, SpmtOutput,
    SpmtState, Termination, Trace, TraceRow,
};
pub use thermal::{heat_generation, thermal_step};
pub use trace_io::{write_trace_csv, TRACE_HEADER};
