//! Simulation and analysis toolkit for entangled two-photon absorption (eTPA)
//! driven by a type-0 SPDC photon-pair source.
//!
//! The pipeline runs molecule → JSA → overlap integral: [`molecule`] models
//! the two-photon response, [`source`] builds the joint spectral amplitude of
//! a periodically poled crystal, [`engine`] integrates the two and sweeps the
//! crystal temperature. [`fitting`] reduces measured count rates to cross
//! sections.

// `!(x > 0.0)` is used throughout so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dispersion;
pub mod engine;
pub mod error;
pub mod fitting;
pub mod io;
pub mod molecule;
pub mod source;
pub mod units;

pub use dispersion::{Dispersion, SellmeierModel};
pub use engine::{
    detuning_penalty, optimal_temperature, probability, sweep_temperatures, temperature_sweep,
    ProbabilityCurve, ProbabilityPoint, ResponseWindow, SweepRange,
};
pub use error::{Error, Result};
pub use molecule::{IntermediateState, MoleculeModel};
pub use source::{
    build_jsa, degenerate_pm_temperature, reference_source, single_photon_spectrum, CrystalSpec,
    GridConfig, JsaGrid, PumpSpec, SpectrumMode,
};
pub use units::{AngularFrequency, Temperature};
