//! Overlap of the molecular response with the photon-pair JSA.
//!
//! The energy-conserving δ in the probability integral is removed by working
//! on the rotated JSA grid: every row has a fixed sum frequency `ω0`, so the
//! inner integral is a line integral over `ν` with Jacobian 1/2, and the outer
//! integral runs over the rows weighted by the final-state lineshape.

use num_complex::Complex64;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{argument, Error, Result};
use crate::molecule::{response_argmax, response_map, MoleculeModel};
use crate::source::{build_jsa, CrystalSpec, GridConfig, JsaGrid, PumpSpec};
use crate::units::{FrequencyGrid, Temperature};

/// Relative eTPA probability at one crystal temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbabilityPoint {
    pub temperature: Temperature,
    pub probability: f64,
}

/// Probability against crystal temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityCurve {
    pub points: Vec<ProbabilityPoint>,
    pub grid: GridConfig,
    /// SHA-256 over the molecule and source parameters.
    pub fingerprint: String,
}

impl ProbabilityCurve {
    pub fn temperatures(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.temperature.0).collect()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.probability).collect()
    }

    /// Probability divided by the curve maximum.
    pub fn normalized(&self) -> Vec<f64> {
        let max = self
            .points
            .iter()
            .map(|p| p.probability)
            .fold(0.0, f64::max);
        self.points
            .iter()
            .map(|p| if max > 0.0 { p.probability / max } else { 0.0 })
            .collect()
    }
}

/// Inclusive, uniformly spaced temperature range.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepRange {
    pub t_min_c: f64,
    pub t_max_c: f64,
    pub n: usize,
}

impl Default for SweepRange {
    /// 33–39 °C in 0.1 °C steps.
    fn default() -> Self {
        Self {
            t_min_c: 33.0,
            t_max_c: 39.0,
            n: 61,
        }
    }
}

impl SweepRange {
    pub fn temperatures(&self) -> Result<Vec<Temperature>> {
        if self.n == 1 && self.t_min_c == self.t_max_c {
            return Ok(vec![Temperature(self.t_min_c)]);
        }
        if self.n < 2 {
            return Err(argument(format!(
                "sweep needs at least 2 temperatures, got {}",
                self.n
            )));
        }
        if !(self.t_max_c > self.t_min_c) {
            return Err(argument(format!(
                "sweep range must be increasing, got [{}, {}] °C",
                self.t_min_c, self.t_max_c
            )));
        }
        let step = (self.t_max_c - self.t_min_c) / (self.n - 1) as f64;
        Ok((0..self.n)
            .map(|i| Temperature(self.t_min_c + step * i as f64))
            .collect())
    }
}

/// Molecule-dependent quadrature weights on a fixed JSA grid, reusable across
/// every JSA sampled on the same axes.
#[derive(Debug, Clone)]
pub struct OverlapKernel {
    omega0_axis: FrequencyGrid,
    nu_axis: FrequencyGrid,
    /// `w_k · L̃(ωi, ωs) · dν / 2`, row-major like the JSA.
    inner_weights: Vec<Complex64>,
    /// `w_m · g(ω0) · dω0`.
    outer_weights: Vec<f64>,
}

impl OverlapKernel {
    pub fn new(
        model: &MoleculeModel,
        omega0_axis: &FrequencyGrid,
        nu_axis: &FrequencyGrid,
    ) -> Self {
        let dnu_half = 0.5 * nu_axis.spacing();
        let inner_weights: Vec<Complex64> = (0..omega0_axis.len())
            .into_par_iter()
            .flat_map_iter(|m| {
                let w0 = omega0_axis.at(m);
                (0..nu_axis.len()).map(move |k| {
                    let nu = nu_axis.at(k);
                    model.reduced_response(0.5 * (w0 + nu), 0.5 * (w0 - nu))
                        * (nu_axis.trapezoid_weight(k) * dnu_half)
                })
            })
            .collect();
        let outer_weights = (0..omega0_axis.len())
            .map(|m| {
                omega0_axis.trapezoid_weight(m)
                    * model.lineshape_at(omega0_axis.at(m))
                    * omega0_axis.spacing()
            })
            .collect();
        Self {
            omega0_axis: omega0_axis.clone(),
            nu_axis: nu_axis.clone(),
            inner_weights,
            outer_weights,
        }
    }

    pub fn for_jsa(model: &MoleculeModel, jsa: &JsaGrid) -> Self {
        Self::new(model, &jsa.omega0_axis, &jsa.nu_axis)
    }

    fn check(&self, jsa: &JsaGrid) {
        assert!(
            self.omega0_axis == jsa.omega0_axis && self.nu_axis == jsa.nu_axis,
            "overlap kernel built for a different grid"
        );
    }

    pub fn inner_amplitude(&self, jsa: &JsaGrid, m: usize) -> Complex64 {
        self.check(jsa);
        self.row_amplitude(jsa, m)
    }

    #[inline]
    fn row_amplitude(&self, jsa: &JsaGrid, m: usize) -> Complex64 {
        let n = self.nu_axis.len();
        let weights = &self.inner_weights[m * n..(m + 1) * n];
        weights
            .iter()
            .zip(jsa.row(m))
            .fold(Complex64::new(0.0, 0.0), |acc, (w, a)| acc + w * a)
    }

    /// Outer quadrature of `g(ω0) |inner(ω0)|²`. Rows are evaluated in
    /// parallel and summed in grid order, so the result does not depend on
    /// scheduling.
    pub fn probability(&self, jsa: &JsaGrid) -> f64 {
        self.check(jsa);
        let rows: Vec<f64> = (0..self.omega0_axis.len())
            .into_par_iter()
            .map(|m| self.outer_weights[m] * self.row_amplitude(jsa, m).norm_sqr())
            .collect();
        rows.iter().sum()
    }
}

/// Inner line integral over `ν` at sum-frequency row `omega0_index`, without
/// the `√g(ω0)` factor.
pub fn inner_amplitude(model: &MoleculeModel, jsa: &JsaGrid, omega0_index: usize) -> Complex64 {
    assert!(
        omega0_index < jsa.omega0_axis.len(),
        "row index out of range"
    );
    let nu = &jsa.nu_axis;
    let w0 = jsa.omega0_axis.at(omega0_index);
    let row = jsa.row(omega0_index);
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, a) in row.iter().enumerate() {
        let v = nu.at(k);
        acc += model.reduced_response(0.5 * (w0 + v), 0.5 * (w0 - v)) * a * nu.trapezoid_weight(k);
    }
    acc * (0.5 * nu.spacing())
}

/// Relative eTPA probability per photon pair for a normalised JSA.
pub fn probability(model: &MoleculeModel, jsa: &JsaGrid) -> f64 {
    OverlapKernel::for_jsa(model, jsa).probability(jsa)
}

/// Stable identifier for a molecule + source combination.
pub fn fingerprint(model: &MoleculeModel, crystal: &CrystalSpec, pump: &PumpSpec) -> String {
    let mut desc = format!(
        "molecule omega_f={:e} gamma_f={:e}\n",
        model.omega_f().0,
        model.gamma_f()
    );
    for s in model.states() {
        desc += &format!(
            "state omega={:e} gamma={:e} d={:e}\n",
            s.omega.0, s.gamma, s.dipole_product
        );
    }
    desc += &format!(
        "crystal length_mm={:e} period_um={:e} dispersion={} offset_c={:e} expansion={}\n",
        crystal.length_mm(),
        crystal.poling_period_um(),
        crystal.dispersion().name(),
        crystal.temperature_offset_c(),
        crystal.thermal_expansion()
    );
    desc += &format!("pump center={:e} sigma={:e}\n", pump.center.0, pump.sigma);
    let digest = Sha256::digest(desc.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn check_increasing(temps: &[Temperature]) -> Result<()> {
    if temps.is_empty() {
        return Err(argument("no temperatures to evaluate"));
    }
    if temps.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(argument("sweep temperatures must be strictly increasing"));
    }
    Ok(())
}

/// Evaluates several molecules against the same freshly normalised JSA at
/// each temperature. One curve per molecule, in input order.
pub fn sweep_temperatures(
    models: &[MoleculeModel],
    crystal: &CrystalSpec,
    pump: &PumpSpec,
    temps: &[Temperature],
    grid: &GridConfig,
) -> Result<Vec<ProbabilityCurve>> {
    check_increasing(temps)?;
    let (omega0_axis, nu_axis) = grid.axes(pump)?;
    let kernels: Vec<OverlapKernel> = models
        .iter()
        .map(|m| OverlapKernel::new(m, &omega0_axis, &nu_axis))
        .collect();
    let mut points: Vec<Vec<ProbabilityPoint>> =
        vec![Vec::with_capacity(temps.len()); models.len()];
    for &t in temps {
        let jsa = build_jsa(crystal, pump, t, grid).map_err(|e| Error::AtTemperature {
            temperature: t.0,
            source: Box::new(e),
        })?;
        for (kernel, pts) in kernels.iter().zip(points.iter_mut()) {
            pts.push(ProbabilityPoint {
                temperature: t,
                probability: kernel.probability(&jsa),
            });
        }
    }
    Ok(models
        .iter()
        .zip(points)
        .map(|(m, pts)| ProbabilityCurve {
            points: pts,
            grid: *grid,
            fingerprint: fingerprint(m, crystal, pump),
        })
        .collect())
}

/// Probability at `n_t` uniformly spaced temperatures in `[t_lo, t_hi]`.
pub fn temperature_sweep(
    model: &MoleculeModel,
    crystal: &CrystalSpec,
    pump: &PumpSpec,
    t_lo: Temperature,
    t_hi: Temperature,
    n_t: usize,
    grid: &GridConfig,
) -> Result<ProbabilityCurve> {
    if !(t_hi.0 > t_lo.0) || n_t < 2 {
        return Err(argument(format!(
            "temperature sweep needs T_lo < T_hi and at least 2 points, got [{}, {}] with {n_t}",
            t_lo.0, t_hi.0
        )));
    }
    let range = SweepRange {
        t_min_c: t_lo.0,
        t_max_c: t_hi.0,
        n: n_t,
    };
    let temps = range.temperatures()?;
    Ok(sweep_temperatures(std::slice::from_ref(model), crystal, pump, &temps, grid)?.remove(0))
}

/// Vertex of the parabola through three points, if it is concave.
fn parabola_vertex(x: [f64; 3], y: [f64; 3]) -> Option<f64> {
    let d01 = (y[1] - y[0]) / (x[1] - x[0]);
    let d12 = (y[2] - y[1]) / (x[2] - x[1]);
    let curvature = (d12 - d01) / (x[2] - x[0]);
    if !(curvature < 0.0) || !curvature.is_finite() {
        return None;
    }
    // y = y1 + d01·(x − x1) + curvature·(x − x0)(x − x1)
    let slope_at_x1 = d01 + curvature * (x[1] - x[0]);
    let v = x[1] - slope_at_x1 / (2.0 * curvature);
    v.is_finite().then_some(v)
}

/// Temperature of maximum probability. Ties resolve to the lower temperature.
/// With `refine`, an interior maximum is moved to the vertex of the parabola
/// through it and its two neighbours; maxima at either end are returned as is.
pub fn optimal_temperature(curve: &ProbabilityCurve, refine: bool) -> Result<Temperature> {
    let pts = &curve.points;
    if pts.is_empty() {
        return Err(argument("empty probability curve"));
    }
    if refine && pts.len() < 3 {
        return Err(argument(format!(
            "parabolic refinement needs at least 3 points, got {}",
            pts.len()
        )));
    }
    let mut best = 0;
    for (i, p) in pts.iter().enumerate() {
        if p.probability > pts[best].probability {
            best = i;
        }
    }
    if !refine || best == 0 || best + 1 == pts.len() {
        return Ok(pts[best].temperature);
    }
    let x = [
        pts[best - 1].temperature.0,
        pts[best].temperature.0,
        pts[best + 1].temperature.0,
    ];
    let y = [
        pts[best - 1].probability,
        pts[best].probability,
        pts[best + 1].probability,
    ];
    Ok(Temperature(
        parabola_vertex(x, y)
            .filter(|v| *v >= x[0] && *v <= x[2])
            .unwrap_or(x[1]),
    ))
}

/// Wavelength window and resolution used to locate the response maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponseWindow {
    pub lambda_min_nm: f64,
    pub lambda_max_nm: f64,
    pub n: usize,
}

impl Default for ResponseWindow {
    fn default() -> Self {
        Self {
            lambda_min_nm: 1000.0,
            lambda_max_nm: 1140.0,
            n: 141,
        }
    }
}

/// Fractional probability loss from the pump not sitting on the response
/// maximum: `1 − P(actual) / P(reference)`, where the reference is the same
/// JSA moved along the sum-frequency axis onto the line `ωi + ωs` through the
/// response maximum.
pub fn detuning_penalty(
    model: &MoleculeModel,
    crystal: &CrystalSpec,
    pump: &PumpSpec,
    t: Temperature,
    grid: &GridConfig,
    window: &ResponseWindow,
) -> Result<f64> {
    let range = (window.lambda_min_nm, window.lambda_max_nm);
    let map = response_map(model, range, range, window.n)?;
    let (wi, ws) = response_argmax(&map);
    let delta = (wi + ws).0 - pump.center.0;
    let jsa = build_jsa(crystal, pump, t, grid)?;
    let actual = probability(model, &jsa);
    let reference = if delta == 0.0 {
        actual
    } else {
        probability(model, &jsa.translated(delta))
    };
    if !(reference > 0.0) || !reference.is_finite() {
        return Err(Error::UndefinedRatio(reference));
    }
    Ok(1.0 - actual / reference)
}

/// Largest relative change between two curves sampled at the same
/// temperatures.
pub fn max_relative_change(coarse: &ProbabilityCurve, fine: &ProbabilityCurve) -> Result<f64> {
    if coarse.points.len() != fine.points.len() {
        return Err(argument("curves have different lengths"));
    }
    let mut worst: f64 = 0.0;
    for (a, b) in coarse.points.iter().zip(&fine.points) {
        if a.temperature != b.temperature {
            return Err(argument("curves are sampled at different temperatures"));
        }
        let change = if a.probability == 0.0 && b.probability == 0.0 {
            0.0
        } else {
            ((b.probability - a.probability) / a.probability).abs()
        };
        worst = worst.max(change);
    }
    Ok(worst)
}
