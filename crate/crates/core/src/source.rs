//! Type-0 SPDC photon-pair source: quasi-phase matching in a periodically
//! poled crystal pumped by a narrowband Gaussian laser.
//!
//! The joint spectral amplitude factorises as `A(ωi, ωs) = α(ωi + ωs) φ(ωi, ωs)`.
//! It is sampled in rotated coordinates, sum frequency `ω0 = ωi + ωs` and
//! difference frequency `ν = ωi − ωs`, because the pump envelope (GHz) and the
//! phase-matching envelope (tens of THz) live on very different scales.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dispersion::{Dispersion, SellmeierModel};
use crate::error::{argument, Error, Result};
use crate::units::{
    omega_to_wavelength, wavelength_to_omega, AngularFrequency, FrequencyGrid, Temperature,
    SPEED_OF_LIGHT,
};

/// Nonlinear crystal: length, poling period and dispersion.
#[derive(Debug, Clone)]
pub struct CrystalSpec {
    length_mm: f64,
    poling_period_um: f64,
    dispersion: Arc<dyn Dispersion>,
    /// Added to every requested temperature before the dispersion model is
    /// evaluated (oven set point → model temperature).
    temperature_offset_c: f64,
    /// Scale the poling period with the medium's thermal expansion.
    thermal_expansion: bool,
}

impl CrystalSpec {
    pub fn new(
        length_mm: f64,
        poling_period_um: f64,
        dispersion: Arc<dyn Dispersion>,
    ) -> Result<Self> {
        if !(length_mm > 0.0) || !length_mm.is_finite() {
            return Err(argument(format!(
                "crystal length must be positive, got {length_mm} mm"
            )));
        }
        if !(poling_period_um > 0.0) || !poling_period_um.is_finite() {
            return Err(argument(format!(
                "poling period must be positive, got {poling_period_um} µm"
            )));
        }
        Ok(Self {
            length_mm,
            poling_period_um,
            dispersion,
            temperature_offset_c: 0.0,
            thermal_expansion: false,
        })
    }

    /// 20 mm MgO:PPLN with a 6.93 µm grating, nominal dispersion, no
    /// temperature calibration.
    pub fn mgo_ppln_6p93um() -> Self {
        Self::new(20.0, 6.93, Arc::new(SellmeierModel::mgo_lithium_niobate()))
            .expect("valid preset")
    }

    pub fn length_mm(&self) -> f64 {
        self.length_mm
    }

    pub fn poling_period_um(&self) -> f64 {
        self.poling_period_um
    }

    pub fn dispersion(&self) -> &dyn Dispersion {
        self.dispersion.as_ref()
    }

    pub fn temperature_offset_c(&self) -> f64 {
        self.temperature_offset_c
    }

    pub fn thermal_expansion(&self) -> bool {
        self.thermal_expansion
    }

    pub fn with_temperature_offset(mut self, offset_c: f64) -> Self {
        self.temperature_offset_c = offset_c;
        self
    }

    pub fn with_thermal_expansion(mut self, enabled: bool) -> Self {
        self.thermal_expansion = enabled;
        self
    }

    /// Sets the temperature offset so that degenerate phase matching at
    /// `omega_deg` occurs at the set point `target`. The uncalibrated root is
    /// searched over the full validity window of the dispersion model.
    pub fn calibrated_to_degeneracy(
        self,
        omega_deg: AngularFrequency,
        target: Temperature,
        search: (Temperature, Temperature),
    ) -> Result<Self> {
        let raw = self.clone().with_temperature_offset(0.0);
        let root = degenerate_pm_temperature(&raw, omega_deg, search.0, search.1)?;
        Ok(self.with_temperature_offset(root.0 - target.0))
    }

    /// Temperature handed to the dispersion model for a given set point.
    pub fn model_temperature(&self, t: Temperature) -> Temperature {
        Temperature(t.0 + self.temperature_offset_c)
    }

    /// Grating wavevector `2π/Λ` in rad/m at a model temperature.
    fn grating_wavevector(&self, model_t: Temperature) -> f64 {
        let mut period = self.poling_period_um * 1e-6;
        if self.thermal_expansion {
            period *= self.dispersion.expansion_factor(model_t);
        }
        2.0 * PI / period
    }

    fn length_m(&self) -> f64 {
        self.length_mm * 1e-3
    }
}

/// Gaussian pump spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpSpec {
    pub center: AngularFrequency,
    /// Spectral standard deviation, rad/s.
    pub sigma: f64,
}

impl PumpSpec {
    pub fn new(center: AngularFrequency, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(argument(format!(
                "pump bandwidth must be positive, got {sigma}"
            )));
        }
        if !(center.0 > 0.0) {
            return Err(argument("pump center frequency must be positive"));
        }
        Ok(Self { center, sigma })
    }

    /// 532 nm pump with σ = 2π × 1.7 GHz.
    pub fn green_532nm() -> Self {
        Self {
            center: wavelength_to_omega(532.0).expect("positive wavelength"),
            sigma: AngularFrequency::from_ghz(1.7).0,
        }
    }

    /// Half the pump center frequency, the degenerate signal/idler frequency.
    pub fn degenerate_omega(&self) -> AngularFrequency {
        AngularFrequency(self.center.0 / 2.0)
    }
}

/// The crystal/pump pair used throughout: 20 mm MgO:PPLN (Λ = 6.93 µm) pumped
/// at 532 nm, with the dispersion temperature scale calibrated so that
/// degenerate 1064 nm phase matching sets in at 34.5 °C.
pub fn reference_source() -> (CrystalSpec, PumpSpec) {
    let pump = PumpSpec::green_532nm();
    let crystal = CrystalSpec::mgo_ppln_6p93um()
        .calibrated_to_degeneracy(
            pump.degenerate_omega(),
            Temperature(REFERENCE_DEGENERACY_C),
            (Temperature(20.0), Temperature(200.0)),
        )
        .expect("reference crystal phase matches within the dispersion window");
    (crystal, pump)
}

/// Set point at which the reference source turns degenerate.
pub const REFERENCE_DEGENERACY_C: f64 = 34.5;

/// Wavevector `k = n(λ, T) ω / c` in rad/m.
pub fn wavevector(model: &dyn Dispersion, omega: AngularFrequency, t: Temperature) -> Result<f64> {
    let lambda_um = omega_to_wavelength(omega)? * 1e-3;
    Ok(model.refractive_index(lambda_um, t)? * omega.0 / SPEED_OF_LIGHT)
}

/// Phase mismatch `Δk = k(ωi + ωs) − k(ωi) − k(ωs) − 2π/Λ` in rad/m, all three
/// waves extraordinary.
pub fn phase_mismatch(
    crystal: &CrystalSpec,
    omega_i: AngularFrequency,
    omega_s: AngularFrequency,
    t: Temperature,
) -> Result<f64> {
    if !(omega_i.0 > 0.0 && omega_s.0 > 0.0) {
        return Err(Error::Domain {
            quantity: "photon frequency (rad/s)",
            value: omega_i.0.min(omega_s.0),
            bound: "must be positive".into(),
        });
    }
    let model_t = crystal.model_temperature(t);
    let d = crystal.dispersion();
    Ok(wavevector(d, omega_i + omega_s, model_t)?
        - wavevector(d, omega_i, model_t)?
        - wavevector(d, omega_s, model_t)?
        - crystal.grating_wavevector(model_t))
}

/// Unnormalised sinc, `sin(x)/x` with `sinc(0) = 1`.
#[inline]
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Phase-matching function `sinc(Δk l / 2)`.
pub fn phase_matching_amplitude(
    crystal: &CrystalSpec,
    omega_i: AngularFrequency,
    omega_s: AngularFrequency,
    t: Temperature,
) -> Result<f64> {
    Ok(sinc(
        phase_mismatch(crystal, omega_i, omega_s, t)? * crystal.length_m() / 2.0,
    ))
}

/// Unit-area Gaussian pump amplitude.
pub fn pump_amplitude(pump: &PumpSpec, omega: AngularFrequency) -> f64 {
    let d = omega.0 - pump.center.0;
    let s2 = pump.sigma * pump.sigma;
    (-d * d / (2.0 * s2)).exp() / (2.0 * PI * s2).sqrt()
}

/// Sampling of the rotated JSA grid.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Nodes along the sum frequency.
    pub n_omega0: usize,
    /// Half width of the sum-frequency axis in units of the pump σ.
    pub omega0_half_width_sigmas: f64,
    /// Nodes along the difference frequency.
    pub n_nu: usize,
    /// Signal/idler wavelength window that sets the ν range, nm.
    pub lambda_min_nm: f64,
    pub lambda_max_nm: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n_omega0: 129,
            omega0_half_width_sigmas: 5.0,
            n_nu: 8193,
            lambda_min_nm: 1000.0,
            lambda_max_nm: 1140.0,
        }
    }
}

impl GridConfig {
    /// Both axes with (n − 1) doubled, so old nodes stay on the new grid.
    pub fn refined(&self) -> Self {
        Self {
            n_omega0: 2 * (self.n_omega0 - 1) + 1,
            n_nu: 2 * (self.n_nu - 1) + 1,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_omega0 < 2 || self.n_nu < 2 {
            return Err(argument(format!(
                "JSA grid needs at least 2 nodes per axis, got {} × {}",
                self.n_omega0, self.n_nu
            )));
        }
        if !(self.omega0_half_width_sigmas > 0.0) {
            return Err(argument("sum-frequency half width must be positive"));
        }
        if !(self.lambda_min_nm > 0.0 && self.lambda_max_nm > self.lambda_min_nm) {
            return Err(argument(format!(
                "wavelength window must satisfy 0 < min < max, got [{}, {}] nm",
                self.lambda_min_nm, self.lambda_max_nm
            )));
        }
        Ok(())
    }

    /// Sum-frequency and difference-frequency axes for a pump. The ν axis is
    /// symmetric about zero and wide enough that both window edges are
    /// reached on the pump-center row.
    pub fn axes(&self, pump: &PumpSpec) -> Result<(FrequencyGrid, FrequencyGrid)> {
        self.validate()?;
        let w0 = pump.center.0;
        let omega0_axis = FrequencyGrid::linspace(
            w0 - self.omega0_half_width_sigmas * pump.sigma,
            w0 + self.omega0_half_width_sigmas * pump.sigma,
            self.n_omega0,
        )?;
        let nu_at = |nm: f64| -> Result<f64> { Ok((2.0 * wavelength_to_omega(nm)?.0 - w0).abs()) };
        let half = nu_at(self.lambda_min_nm)?.max(nu_at(self.lambda_max_nm)?);
        if !(half > 0.0) {
            return Err(argument(
                "wavelength window collapses the difference-frequency axis",
            ));
        }
        let nu_axis = FrequencyGrid::linspace(-half, half, self.n_nu)?;
        Ok((omega0_axis, nu_axis))
    }
}

/// Joint spectral amplitude on the rotated `(ω0, ν)` grid, unit-normalised so
/// that `Σ |A|² dω0 dν / 2 = 1` under the trapezoid rule.
#[derive(Debug, Clone)]
pub struct JsaGrid {
    pub omega0_axis: FrequencyGrid,
    pub nu_axis: FrequencyGrid,
    /// Row-major: `values[m * nu_axis.len() + k]`.
    pub values: Vec<Complex64>,
    /// L2 norm before normalisation.
    pub norm: f64,
}

impl JsaGrid {
    /// Normalises raw samples onto a JSA grid.
    pub fn from_values(
        omega0_axis: FrequencyGrid,
        nu_axis: FrequencyGrid,
        mut values: Vec<Complex64>,
    ) -> Result<Self> {
        if values.len() != omega0_axis.len() * nu_axis.len() {
            return Err(argument(format!(
                "JSA has {} samples, expected {} × {}",
                values.len(),
                omega0_axis.len(),
                nu_axis.len()
            )));
        }
        let norm = l2_norm(&omega0_axis, &nu_axis, &values).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(argument(format!("JSA cannot be normalised (norm {norm})")));
        }
        let inv = 1.0 / norm;
        for v in &mut values {
            *v *= inv;
        }
        Ok(Self {
            omega0_axis,
            nu_axis,
            values,
            norm,
        })
    }

    #[inline]
    pub fn row(&self, m: usize) -> &[Complex64] {
        let n = self.nu_axis.len();
        &self.values[m * n..(m + 1) * n]
    }

    /// `Σ |A|² dω0 dν / 2`.
    pub fn norm_squared(&self) -> f64 {
        l2_norm(&self.omega0_axis, &self.nu_axis, &self.values)
    }

    /// Same samples attached to a sum-frequency axis moved by `delta` rad/s.
    pub fn translated(&self, delta: f64) -> Self {
        Self {
            omega0_axis: self.omega0_axis.shifted(delta),
            ..self.clone()
        }
    }

    /// Every sample multiplied by `factor`; the stored norm is unchanged.
    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * factor).collect(),
            ..self.clone()
        }
    }

    /// Idler/signal frequencies of node `(m, k)`.
    #[inline]
    pub fn photon_pair(&self, m: usize, k: usize) -> (f64, f64) {
        let w0 = self.omega0_axis.at(m);
        let nu = self.nu_axis.at(k);
        (0.5 * (w0 + nu), 0.5 * (w0 - nu))
    }
}

fn l2_norm(omega0_axis: &FrequencyGrid, nu_axis: &FrequencyGrid, values: &[Complex64]) -> f64 {
    let n = nu_axis.len();
    let mut total = 0.0;
    for m in 0..omega0_axis.len() {
        let row = &values[m * n..(m + 1) * n];
        let s: f64 = row
            .iter()
            .enumerate()
            .map(|(k, v)| nu_axis.trapezoid_weight(k) * v.norm_sqr())
            .sum();
        total += omega0_axis.trapezoid_weight(m) * s;
    }
    total * omega0_axis.spacing() * nu_axis.spacing() * 0.5
}

/// Samples `α(ω0) sinc(Δk l/2)` on the rotated grid and normalises it.
pub fn build_jsa(
    crystal: &CrystalSpec,
    pump: &PumpSpec,
    t: Temperature,
    grid: &GridConfig,
) -> Result<JsaGrid> {
    let (omega0_axis, nu_axis) = grid.axes(pump)?;
    let model_t = crystal.model_temperature(t);
    let disp = crystal.dispersion();
    let grating = crystal.grating_wavevector(model_t);
    let half_length = crystal.length_m() / 2.0;

    let rows: Vec<Vec<Complex64>> = (0..omega0_axis.len())
        .into_par_iter()
        .map(|m| -> Result<Vec<Complex64>> {
            let w0 = omega0_axis.at(m);
            let alpha = pump_amplitude(pump, AngularFrequency(w0));
            let k_pump = wavevector(disp, AngularFrequency(w0), model_t)?;
            nu_axis
                .iter()
                .map(|nu| {
                    let wi = AngularFrequency(0.5 * (w0 + nu));
                    let ws = AngularFrequency(0.5 * (w0 - nu));
                    let dk = k_pump
                        - wavevector(disp, wi, model_t)?
                        - wavevector(disp, ws, model_t)?
                        - grating;
                    Ok(Complex64::new(alpha * sinc(dk * half_length), 0.0))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    JsaGrid::from_values(omega0_axis, nu_axis, rows.concat())
}

/// How the single-photon spectrum integrates out the partner photon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpectrumMode {
    /// `|∫ dωs A(ωi, ωs)|²`.
    #[default]
    Coherent,
    /// `∫ dωs |A(ωi, ωs)|²`, the reduced-density-matrix marginal.
    Incoherent,
}

/// Single-photon spectrum on an idler-frequency axis, peak-normalised.
#[derive(Debug, Clone)]
pub struct SinglePhotonSpectrum {
    /// Idler angular frequencies, increasing.
    pub omega: Vec<f64>,
    pub intensity: Vec<f64>,
}

impl SinglePhotonSpectrum {
    /// `(λ nm, intensity)` pairs sorted by increasing wavelength.
    pub fn wavelength_rows(&self) -> Vec<(f64, f64)> {
        self.omega
            .iter()
            .rev()
            .zip(self.intensity.iter().rev())
            .map(|(&w, &i)| (2.0 * PI * SPEED_OF_LIGHT / w * 1e9, i))
            .collect()
    }

    /// Peak wavelengths (nm, ascending) of the separate lobes rising above
    /// `fraction` of the global maximum.
    pub fn lobes(&self, fraction: f64) -> Vec<f64> {
        let rows = self.wavelength_rows();
        let max = rows.iter().map(|r| r.1).fold(0.0, f64::max);
        let threshold = fraction * max;
        let mut peaks = Vec::new();
        let mut current: Option<(f64, f64)> = None;
        for &(lambda, value) in &rows {
            if value >= threshold && max > 0.0 {
                current = match current {
                    Some((l, v)) if v >= value => Some((l, v)),
                    _ => Some((lambda, value)),
                };
            } else if let Some((l, _)) = current.take() {
                peaks.push(l);
            }
        }
        if let Some((l, _)) = current {
            peaks.push(l);
        }
        peaks
    }

    /// Distance in nm between the outermost points at `fraction` of the peak.
    pub fn full_width_nm(&self, fraction: f64) -> f64 {
        let rows = self.wavelength_rows();
        let max = rows.iter().map(|r| r.1).fold(0.0, f64::max);
        let above: Vec<f64> = rows
            .iter()
            .filter(|r| r.1 >= fraction * max)
            .map(|r| r.0)
            .collect();
        match (above.first(), above.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }
}

/// Single-photon spectrum of the idler. The output axis is
/// `ωi = (ω̄0 + ν)/2` with `ω̄0` the center of the sum-frequency axis. For each
/// idler frequency the partner runs along the sum-frequency rows; samples are
/// read off each row by linear interpolation in ν. Type-0 exchange symmetry
/// makes the signal spectrum identical.
pub fn single_photon_spectrum(jsa: &JsaGrid, mode: SpectrumMode) -> SinglePhotonSpectrum {
    let o = &jsa.omega0_axis;
    let nu = &jsa.nu_axis;
    let n = nu.len();
    let center = o.center();
    let dnu = nu.spacing();

    let sample = |m: usize, target: f64| -> Complex64 {
        let pos = (target - nu.first()) / dnu;
        if pos < 0.0 || pos > (n - 1) as f64 {
            return Complex64::new(0.0, 0.0);
        }
        let k = (pos.floor() as usize).min(n - 2);
        let frac = pos - k as f64;
        let row = jsa.row(m);
        row[k] * (1.0 - frac) + row[k + 1] * frac
    };

    let intensity: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|k| {
            let nu_k = nu.at(k);
            match mode {
                SpectrumMode::Coherent => {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for m in 0..o.len() {
                        let delta = o.at(m) - center;
                        acc += sample(m, nu_k - delta) * o.trapezoid_weight(m);
                    }
                    (acc * o.spacing()).norm_sqr()
                }
                SpectrumMode::Incoherent => {
                    let mut acc = 0.0;
                    for m in 0..o.len() {
                        let delta = o.at(m) - center;
                        acc += sample(m, nu_k - delta).norm_sqr() * o.trapezoid_weight(m);
                    }
                    acc * o.spacing()
                }
            }
        })
        .collect();
    let peak = intensity.iter().cloned().fold(0.0, f64::max);
    let scale = if peak > 0.0 { 1.0 / peak } else { 0.0 };
    SinglePhotonSpectrum {
        omega: nu.iter().map(|v| 0.5 * (center + v)).collect(),
        intensity: intensity.into_iter().map(|v| v * scale).collect(),
    }
}

/// Set point at which degenerate phase matching at `omega_deg` is reached,
/// found by bisection of `T ↦ Δk(ωdeg, ωdeg, T)` to better than 0.01 °C.
pub fn degenerate_pm_temperature(
    crystal: &CrystalSpec,
    omega_deg: AngularFrequency,
    t_lo: Temperature,
    t_hi: Temperature,
) -> Result<Temperature> {
    let (mut lo, mut hi) = if t_lo.0 <= t_hi.0 {
        (t_lo.0, t_hi.0)
    } else {
        (t_hi.0, t_lo.0)
    };
    let f = |t: f64| phase_mismatch(crystal, omega_deg, omega_deg, Temperature(t));
    let mut f_lo = f(lo)?;
    let f_hi = f(hi)?;
    if f_lo == 0.0 {
        return Ok(Temperature(lo));
    }
    if f_hi == 0.0 {
        return Ok(Temperature(hi));
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::Bracketing { lo, hi });
    }
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid)?;
        if f_mid == 0.0 {
            return Ok(Temperature(mid));
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(Temperature(0.5 * (lo + hi)))
}
