//! Temperature-dependent refractive index models.

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::sync::OnceLock;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::units::Temperature;

const COEFFICIENT_TABLE: &str = include_str!("../data/dispersion.toml");

/// Anything that can produce a refractive index for a vacuum wavelength (µm)
/// and temperature.
pub trait Dispersion: Debug + Send + Sync {
    fn refractive_index(&self, wavelength_um: f64, temperature: Temperature) -> Result<f64>;

    /// Relative change of the poling period with temperature, `Λ(T)/Λ(25 °C)`.
    /// Media without thermal-expansion data return 1.
    fn expansion_factor(&self, _temperature: Temperature) -> f64 {
        1.0
    }

    /// Short identifier for fingerprints and metadata.
    fn name(&self) -> &str;
}

/// One entry of the coefficient table.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct SellmeierModel {
    #[serde(skip)]
    name: String,
    pub description: String,
    pub reference: String,
    pub t0_c: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    pub a5: f64,
    pub a6: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub b4: f64,
    pub wavelength_min_um: f64,
    pub wavelength_max_um: f64,
    pub temperature_min_c: f64,
    pub temperature_max_c: f64,
    #[serde(default)]
    pub expansion_alpha: f64,
    #[serde(default)]
    pub expansion_beta: f64,
}

fn table() -> &'static BTreeMap<String, SellmeierModel> {
    static TABLE: OnceLock<BTreeMap<String, SellmeierModel>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut parsed: BTreeMap<String, SellmeierModel> =
            toml::from_str(COEFFICIENT_TABLE).expect("embedded dispersion table is valid TOML");
        for (k, v) in parsed.iter_mut() {
            v.name = k.clone();
        }
        parsed
    })
}

impl SellmeierModel {
    /// Named coefficient set from the embedded table.
    pub fn named(name: &str) -> Result<Self> {
        table()
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownPreset {
                kind: "dispersion coefficient set",
                name: name.to_string(),
            })
    }

    /// Extraordinary index of 5 % MgO-doped congruent lithium niobate.
    pub fn mgo_lithium_niobate() -> Self {
        Self::named("mgo_cln_5pct_extraordinary").expect("shipped coefficient set")
    }

    pub fn available() -> impl Iterator<Item = &'static str> {
        table().keys().map(String::as_str)
    }

    fn check(&self, wavelength_um: f64, t: f64) -> Result<()> {
        if !(wavelength_um >= self.wavelength_min_um && wavelength_um <= self.wavelength_max_um) {
            return Err(Error::Domain {
                quantity: "wavelength (µm)",
                value: wavelength_um,
                bound: format!(
                    "{} µm ≤ λ ≤ {} µm",
                    self.wavelength_min_um, self.wavelength_max_um
                ),
            });
        }
        if !(t >= self.temperature_min_c && t <= self.temperature_max_c) {
            return Err(Error::Domain {
                quantity: "temperature (°C)",
                value: t,
                bound: format!(
                    "{} °C ≤ T ≤ {} °C",
                    self.temperature_min_c, self.temperature_max_c
                ),
            });
        }
        Ok(())
    }

    /// `n²` without range checks.
    #[inline]
    pub(crate) fn index_squared(&self, wavelength_um: f64, t: f64) -> f64 {
        let f = (t - self.t0_c) * (t + self.t0_c + 2.0 * 273.16);
        let l2 = wavelength_um * wavelength_um;
        let pole = self.a3 + self.b3 * f;
        self.a1
            + self.b1 * f
            + (self.a2 + self.b2 * f) / (l2 - pole * pole)
            + (self.a4 + self.b4 * f) / (l2 - self.a5 * self.a5)
            - self.a6 * l2
    }
}

impl Dispersion for SellmeierModel {
    fn refractive_index(&self, wavelength_um: f64, temperature: Temperature) -> Result<f64> {
        self.check(wavelength_um, temperature.0)?;
        Ok(self.index_squared(wavelength_um, temperature.0).sqrt())
    }

    fn expansion_factor(&self, temperature: Temperature) -> f64 {
        let dt = temperature.0 - 25.0;
        1.0 + self.expansion_alpha * dt + self.expansion_beta * dt * dt
    }

    fn name(&self) -> &str {
        &self.name
    }
}

/// Extraordinary index `n_e(λ, T)` of a coefficient set, range-checked.
pub fn refractive_index(
    model: &dyn Dispersion,
    wavelength_um: f64,
    temperature: Temperature,
) -> Result<f64> {
    model.refractive_index(wavelength_um, temperature)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Direct transcription of the published formula, kept apart from the
    /// table-driven implementation.
    fn oracle_ne(lambda_um: f64, t: f64) -> f64 {
        let f = (t - 24.5) * (t + 570.82);
        let l2 = lambda_um * lambda_um;
        (5.756
            + 2.860e-6 * f
            + (0.0983 + 4.700e-8 * f) / (l2 - (0.2020 + 6.113e-8 * f).powi(2))
            + (189.32 + 1.516e-4 * f) / (l2 - 12.52f64.powi(2))
            - 1.32e-2 * l2)
            .sqrt()
    }

    #[test]
    fn matches_oracle_at_1064nm_35c() {
        let m = SellmeierModel::mgo_lithium_niobate();
        let n = m.refractive_index(1.064, Temperature(35.0)).unwrap();
        assert_relative_eq!(n, oracle_ne(1.064, 35.0), max_relative = 1e-14);
        assert_relative_eq!(n, 2.151_011_285_2, max_relative = 1e-10);
    }

    #[test]
    fn visible_to_near_infrared_sweep() {
        let m = SellmeierModel::mgo_lithium_niobate();
        for i in 0..=70 {
            let lambda = 0.5 + 0.01 * i as f64;
            for t in [20.0, 30.0, 40.0, 50.0, 60.0] {
                let n = m.refractive_index(lambda, Temperature(t)).unwrap();
                assert!(n > 2.0 && n < 2.4, "n({lambda}, {t}) = {n}");
                assert_relative_eq!(n, oracle_ne(lambda, t), max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn physical_range_over_validity_window() {
        let m = SellmeierModel::mgo_lithium_niobate();
        for i in 0..=36 {
            let lambda = 0.4 + 0.1 * i as f64;
            for t in [20.0, 80.0, 140.0, 200.0] {
                let n = m.refractive_index(lambda, Temperature(t)).unwrap();
                assert!(n > 1.0 && n < 4.0);
            }
        }
    }

    #[test]
    fn index_depends_on_temperature() {
        let m = SellmeierModel::mgo_lithium_niobate();
        let a = m.refractive_index(1.064, Temperature(30.0)).unwrap();
        let b = m.refractive_index(1.064, Temperature(40.0)).unwrap();
        assert_ne!(a, b);
        assert!(b > a);
    }

    #[test]
    fn out_of_range_names_the_bound() {
        let m = SellmeierModel::mgo_lithium_niobate();
        let err = m.refractive_index(5.0, Temperature(30.0)).unwrap_err();
        assert!(err.to_string().contains("λ ≤ 4"), "{err}");
        let err = m.refractive_index(1.0, Temperature(10.0)).unwrap_err();
        assert!(err.to_string().contains("20 °C ≤ T"), "{err}");
        let err = m.refractive_index(1.0, Temperature(250.0)).unwrap_err();
        assert!(err.to_string().contains("T ≤ 200"), "{err}");
    }

    #[test]
    fn table_lookup() {
        assert!(SellmeierModel::available().any(|n| n == "mgo_cln_5pct_extraordinary"));
        assert!(matches!(
            SellmeierModel::named("bbo"),
            Err(Error::UnknownPreset { .. })
        ));
        let m = SellmeierModel::mgo_lithium_niobate();
        assert_eq!(m.name(), "mgo_cln_5pct_extraordinary");
        assert_eq!(m.expansion_factor(Temperature(25.0)), 1.0);
        assert!(m.expansion_factor(Temperature(50.0)) > 1.0);
    }
}
