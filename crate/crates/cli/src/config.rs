//! Run configuration read from TOML.
//!
//! Every section is optional; missing sections fall back to the reference
//! setup (Nile Red, 20 mm MgO:PPLN with a 6.93 µm grating, 532 nm pump).

use std::path::{Path, PathBuf};
use std::sync::Arc;

use etpa_core::engine::ResponseWindow;
use etpa_core::fitting::RateCorrection;
use etpa_core::units::wavelength_to_omega;
use etpa_core::{
    AngularFrequency, CrystalSpec, GridConfig, IntermediateState, MoleculeModel, PumpSpec,
    SellmeierModel, SpectrumMode, SweepRange, Temperature,
};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub molecule: MoleculeSection,
    pub crystal: CrystalSection,
    pub pump: PumpSection,
    pub grid: GridConfig,
    pub sweep: SweepRange,
    pub response: ResponseSection,
    pub spectrum: SpectrumSection,
    pub sample: SampleSection,
    pub correction: Option<CorrectionSection>,
    pub output: OutputSection,
}

/// Preset name or explicit parameters; Nile Red when neither is given.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MoleculeSection {
    pub preset: Option<String>,
    pub final_nm: Option<f64>,
    pub final_width_2pi_thz: Option<f64>,
    pub states: Vec<StateSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSection {
    pub nm: f64,
    pub width_2pi_thz: f64,
    pub dipole_product: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CrystalSection {
    pub length_mm: f64,
    pub poling_period_um: f64,
    pub dispersion: String,
    /// Set point at which degenerate phase matching should occur; fixes the
    /// temperature offset of the dispersion model.
    pub degenerate_at_c: Option<f64>,
    pub temperature_offset_c: Option<f64>,
    pub thermal_expansion: bool,
}

impl Default for CrystalSection {
    fn default() -> Self {
        Self {
            length_mm: 20.0,
            poling_period_um: 6.93,
            dispersion: "mgo_cln_5pct_extraordinary".into(),
            degenerate_at_c: Some(etpa_core::source::REFERENCE_DEGENERACY_C),
            temperature_offset_c: None,
            thermal_expansion: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PumpSection {
    pub center_nm: f64,
    pub sigma_2pi_ghz: f64,
}

impl Default for PumpSection {
    fn default() -> Self {
        Self {
            center_nm: 532.0,
            sigma_2pi_ghz: 1.7,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResponseSection {
    pub lambda_min_nm: f64,
    pub lambda_max_nm: f64,
    pub n: usize,
}

impl Default for ResponseSection {
    fn default() -> Self {
        let w = ResponseWindow::default();
        Self {
            lambda_min_nm: w.lambda_min_nm,
            lambda_max_nm: w.lambda_max_nm,
            n: w.n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    #[default]
    Coherent,
    Incoherent,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumSection {
    pub temperatures: Vec<f64>,
    pub mode: ModeName,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self {
            temperatures: vec![34.0, 35.0, 35.7, 36.0, 37.5],
            mode: ModeName::Coherent,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SampleSection {
    pub concentration_mmol_l: f64,
    pub path_length_mm: f64,
}

impl Default for SampleSection {
    fn default() -> Self {
        Self {
            concentration_mmol_l: 0.5,
            path_length_mm: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrectionSection {
    #[serde(default)]
    pub dark_cps: f64,
    #[serde(default = "unit")]
    pub efficiency: f64,
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: ".".into() }
    }
}

/// Everything a command needs, built and checked before any work starts.
#[derive(Debug, Clone)]
pub struct Setup {
    pub molecule: MoleculeModel,
    pub crystal: CrystalSpec,
    pub pump: PumpSpec,
    pub grid: GridConfig,
    pub sweep: SweepRange,
    pub response: ResponseWindow,
    pub spectrum_temperatures: Vec<f64>,
    pub spectrum_mode: SpectrumMode,
    pub concentration_mol_l: f64,
    pub path_length_mm: f64,
    pub correction: Option<RateCorrection>,
    pub out_dir: PathBuf,
}

fn field(name: &str) -> impl Fn(etpa_core::Error) -> CliError + '_ {
    move |e| CliError::Config(format!("{name}: {e}"))
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Config(format!(
            "{name}: must be positive, got {v}"
        )))
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    fn molecule(&self) -> Result<MoleculeModel, CliError> {
        let m = &self.molecule;
        let explicit =
            m.final_nm.is_some() || m.final_width_2pi_thz.is_some() || !m.states.is_empty();
        match (&m.preset, explicit) {
            (Some(_), true) => Err(CliError::Config(
                "molecule: give either `preset` or explicit parameters, not both".into(),
            )),
            (Some(name), false) => MoleculeModel::preset(name).map_err(field("molecule.preset")),
            (None, false) => Ok(MoleculeModel::nile_red()),
            (None, true) => {
                let final_nm = m
                    .final_nm
                    .ok_or_else(|| CliError::Config("molecule.final_nm: missing".into()))?;
                let width = m.final_width_2pi_thz.ok_or_else(|| {
                    CliError::Config("molecule.final_width_2pi_thz: missing".into())
                })?;
                let states = m
                    .states
                    .iter()
                    .enumerate()
                    .map(|(j, s)| {
                        let name = format!("molecule.states[{j}]");
                        let omega = wavelength_to_omega(s.nm)
                            .map_err(|e| CliError::Config(format!("{name}.nm: {e}")))?;
                        IntermediateState::new(
                            omega,
                            AngularFrequency::from_thz(s.width_2pi_thz).0,
                            s.dipole_product,
                        )
                        .map_err(|e| CliError::Config(format!("{name}: {e}")))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                MoleculeModel::new(
                    wavelength_to_omega(final_nm).map_err(field("molecule.final_nm"))?,
                    AngularFrequency::from_thz(width).0,
                    states,
                )
                .map_err(field("molecule"))
            }
        }
    }

    fn pump(&self) -> Result<PumpSpec, CliError> {
        let center = wavelength_to_omega(positive("pump.center_nm", self.pump.center_nm)?)
            .map_err(field("pump.center_nm"))?;
        let sigma =
            AngularFrequency::from_ghz(positive("pump.sigma_2pi_ghz", self.pump.sigma_2pi_ghz)?).0;
        PumpSpec::new(center, sigma).map_err(field("pump"))
    }

    fn crystal(&self, pump: &PumpSpec) -> Result<CrystalSpec, CliError> {
        let c = &self.crystal;
        let dispersion =
            SellmeierModel::named(&c.dispersion).map_err(field("crystal.dispersion"))?;
        let (t_min, t_max) = (dispersion.temperature_min_c, dispersion.temperature_max_c);
        let crystal = CrystalSpec::new(c.length_mm, c.poling_period_um, Arc::new(dispersion))
            .map_err(field("crystal"))?
            .with_thermal_expansion(c.thermal_expansion);
        match (c.degenerate_at_c, c.temperature_offset_c) {
            (Some(_), Some(_)) => Err(CliError::Config(
                "crystal: `degenerate_at_c` and `temperature_offset_c` are mutually exclusive"
                    .into(),
            )),
            (Some(t), None) => crystal
                .calibrated_to_degeneracy(
                    pump.degenerate_omega(),
                    Temperature(t),
                    (Temperature(t_min), Temperature(t_max)),
                )
                .map_err(field("crystal.degenerate_at_c")),
            (None, Some(offset)) if offset.is_finite() => {
                Ok(crystal.with_temperature_offset(offset))
            }
            (None, Some(offset)) => Err(CliError::Config(format!(
                "crystal.temperature_offset_c: must be finite, got {offset}"
            ))),
            (None, None) => Ok(crystal),
        }
    }

    /// Builds every model object and checks every numeric field.
    pub fn setup(&self, out_override: Option<&Path>) -> Result<Setup, CliError> {
        let molecule = self.molecule()?;
        let pump = self.pump()?;
        let crystal = self.crystal(&pump)?;
        self.grid.validate().map_err(field("grid"))?;
        self.grid.axes(&pump).map_err(field("grid"))?;
        self.sweep.temperatures().map_err(field("sweep"))?;
        let response = ResponseWindow {
            lambda_min_nm: self.response.lambda_min_nm,
            lambda_max_nm: self.response.lambda_max_nm,
            n: self.response.n,
        };
        if !(response.lambda_min_nm > 0.0 && response.lambda_max_nm > response.lambda_min_nm)
            || response.n < 2
        {
            return Err(CliError::Config(format!(
                "response: need 0 < lambda_min_nm < lambda_max_nm and n ≥ 2, got [{}, {}] nm with n = {}",
                response.lambda_min_nm, response.lambda_max_nm, response.n
            )));
        }
        let correction = match self.correction {
            Some(c) => {
                positive("correction.efficiency", c.efficiency)?;
                if !c.dark_cps.is_finite() {
                    return Err(CliError::Config(
                        "correction.dark_cps: must be finite".into(),
                    ));
                }
                Some(RateCorrection {
                    dark_cps: c.dark_cps,
                    efficiency: c.efficiency,
                })
            }
            None => None,
        };
        Ok(Setup {
            molecule,
            crystal,
            pump,
            grid: self.grid,
            sweep: self.sweep,
            response,
            spectrum_temperatures: self.spectrum.temperatures.clone(),
            spectrum_mode: match self.spectrum.mode {
                ModeName::Coherent => SpectrumMode::Coherent,
                ModeName::Incoherent => SpectrumMode::Incoherent,
            },
            concentration_mol_l: positive(
                "sample.concentration_mmol_l",
                self.sample.concentration_mmol_l,
            )? / 1000.0,
            path_length_mm: positive("sample.path_length_mm", self.sample.path_length_mm)?,
            correction,
            out_dir: out_override.map_or_else(|| self.output.dir.clone(), Path::to_path_buf),
        })
    }
}
