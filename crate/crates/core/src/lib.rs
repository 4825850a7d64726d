//! Battery voltage modelling with a single particle model (SPMT), a
//! from-scratch feedforward network, and hybrids that feed the SPMT's state
//! into the network.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod eval;
pub mod fnn;
pub mod hash;
pub mod hybrid;
pub mod params;
pub mod profile;
pub mod spmt;
pub mod truth;

pub use error::Error;
pub use params::{CellParameters, ElectrodeParameters, ParameterFile, SolverSettings};
pub use profile::{make_constant_profile, make_drive_cycle, CurrentProfile, DriveFamily};
pub use spmt::{Spmt, SpmtOutput, SpmtState, Termination, Trace};
