//! Few-level molecular model and its two-photon response.
//!
//! The response couples an idler/signal frequency pair to the final state
//! through a sum over intermediate states,
//! `L(ωi, ωs; ω0) = √g(ω0) Σj Dj (1/Δj(ωi) + 1/Δj(ωs))`, where
//! `Δj(ω) = ωj − ω + iγj` and `g` is the Lorentzian lineshape of the final
//! state.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{argument, Result};
use crate::units::{wavelength_to_omega, AngularFrequency, FrequencyGrid};

/// A level mediating the two-photon transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntermediateState {
    pub omega: AngularFrequency,
    /// Linewidth, rad/s.
    pub gamma: f64,
    /// Product of the ground→intermediate and intermediate→final transition
    /// dipoles, dimensionless.
    pub dipole_product: f64,
}

impl IntermediateState {
    pub fn new(omega: AngularFrequency, gamma: f64, dipole_product: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(argument(format!(
                "intermediate-state linewidth must be positive, got {gamma}"
            )));
        }
        if !(omega.0 > 0.0) || !dipole_product.is_finite() {
            return Err(argument(format!(
                "intermediate state needs a positive frequency and finite dipole product (ω = {}, D = {dipole_product})",
                omega.0
            )));
        }
        Ok(Self {
            omega,
            gamma,
            dipole_product,
        })
    }
}

/// Final state plus the intermediate states that feed it.
#[derive(Debug, Clone, PartialEq)]
pub struct MoleculeModel {
    omega_f: AngularFrequency,
    gamma_f: f64,
    states: Vec<IntermediateState>,
}

impl MoleculeModel {
    pub fn new(
        omega_f: AngularFrequency,
        gamma_f: f64,
        states: Vec<IntermediateState>,
    ) -> Result<Self> {
        if !(gamma_f > 0.0) || !gamma_f.is_finite() {
            return Err(argument(format!(
                "final-state width must be positive, got {gamma_f}"
            )));
        }
        if !(omega_f.0 > 0.0) {
            return Err(argument("final-state frequency must be positive"));
        }
        if states.is_empty() {
            return Err(argument("molecule needs at least one intermediate state"));
        }
        Ok(Self {
            omega_f,
            gamma_f,
            states,
        })
    }

    /// Nile Red: final state at 548 nm with a 2π × 50 THz width, intermediates
    /// at 440 nm and 325 nm (γ = 2π × 24 THz, D = 0.086 and 0.078).
    pub fn nile_red() -> Self {
        let gamma = AngularFrequency::from_thz(24.0).0;
        let state = |nm: f64, d: f64| IntermediateState {
            omega: wavelength_to_omega(nm).expect("positive wavelength"),
            gamma,
            dipole_product: d,
        };
        Self {
            omega_f: wavelength_to_omega(548.0).expect("positive wavelength"),
            gamma_f: AngularFrequency::from_thz(50.0).0,
            states: vec![state(440.0, 0.086), state(325.0, 0.078)],
        }
    }

    /// Looks up a shipped model by name.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "nile_red" => Ok(Self::nile_red()),
            _ => Err(crate::Error::UnknownPreset {
                kind: "molecule preset",
                name: name.to_string(),
            }),
        }
    }

    pub fn omega_f(&self) -> AngularFrequency {
        self.omega_f
    }

    pub fn gamma_f(&self) -> f64 {
        self.gamma_f
    }

    pub fn states(&self) -> &[IntermediateState] {
        &self.states
    }

    /// Copy with every dipole product multiplied by `factor`.
    pub fn with_scaled_dipoles(&self, factor: f64) -> Self {
        let mut m = self.clone();
        for s in &mut m.states {
            s.dipole_product *= factor;
        }
        m
    }

    /// Copy with the `j`-th dipole product multiplied by `factor`.
    pub fn with_scaled_dipole(&self, j: usize, factor: f64) -> Self {
        let mut m = self.clone();
        m.states[j].dipole_product *= factor;
        m
    }

    /// Copy with every intermediate linewidth multiplied by `factor`.
    pub fn with_scaled_linewidths(&self, factor: f64) -> Self {
        let mut m = self.clone();
        for s in &mut m.states {
            s.gamma *= factor;
        }
        m
    }

    /// True when every dipole product vanishes.
    pub fn is_dark(&self) -> bool {
        self.states.iter().all(|s| s.dipole_product == 0.0)
    }

    /// Response without the `√g(ω0)` factor. Depends only on the photon pair.
    #[inline]
    pub fn reduced_response(&self, omega_i: f64, omega_s: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for st in &self.states {
            let a = Complex64::new(st.omega.0 - omega_i, st.gamma).inv();
            let b = Complex64::new(st.omega.0 - omega_s, st.gamma).inv();
            acc += (a + b) * st.dipole_product;
        }
        acc
    }

    #[inline]
    pub(crate) fn lineshape_at(&self, omega0: f64) -> f64 {
        let d = self.omega_f.0 - omega0;
        let g2 = self.gamma_f * self.gamma_f;
        g2 / (d * d + g2) / PI
    }
}

/// Complex frequency mismatch `ωj − ω + iγj`.
pub fn detuning(state: &IntermediateState, omega: AngularFrequency) -> Complex64 {
    Complex64::new(state.omega.0 - omega.0, state.gamma)
}

/// Lorentzian lineshape of the final state as written, with peak value `1/π`
/// at `ω0 = ωf`.
pub fn lorentzian_lineshape(model: &MoleculeModel, omega0: AngularFrequency) -> f64 {
    model.lineshape_at(omega0.0)
}

/// Two-photon response `L_{ω0}(ωi, ωs)`. `ω0` is independent of the photon
/// frequencies here; energy conservation is imposed by the caller.
pub fn response(
    model: &MoleculeModel,
    omega_i: AngularFrequency,
    omega_s: AngularFrequency,
    omega0: AngularFrequency,
) -> Complex64 {
    model.reduced_response(omega_i.0, omega_s.0) * model.lineshape_at(omega0.0).sqrt()
}

/// Response sampled on a rectangle of idler/signal frequencies with
/// `ω0 = ωi + ωs` at every node.
#[derive(Debug, Clone)]
pub struct ResponseGrid {
    pub omega_i_axis: FrequencyGrid,
    pub omega_s_axis: FrequencyGrid,
    /// Row-major, `values[i * n_s + s]`.
    pub values: Vec<Complex64>,
}

impl ResponseGrid {
    pub fn get(&self, i: usize, s: usize) -> Complex64 {
        self.values[i * self.omega_s_axis.len() + s]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

fn wavelength_axis(range_nm: (f64, f64), n: usize) -> Result<FrequencyGrid> {
    let (a, b) = range_nm;
    if !(a > 0.0 && b > 0.0) {
        return Err(argument(format!(
            "wavelength range must be positive, got ({a}, {b})"
        )));
    }
    if a == b {
        return Err(argument(format!("empty wavelength range ({a}, {b})")));
    }
    let lo = wavelength_to_omega(a.max(b))?;
    let hi = wavelength_to_omega(a.min(b))?;
    FrequencyGrid::linspace(lo.0, hi.0, n)
}

/// Samples `L` on an `n × n` grid uniform in frequency spanning the two
/// wavelength ranges (nm).
pub fn response_map(
    model: &MoleculeModel,
    lambda_i_range: (f64, f64),
    lambda_s_range: (f64, f64),
    n: usize,
) -> Result<ResponseGrid> {
    if n < 2 {
        return Err(argument(format!("response map needs n ≥ 2, got {n}")));
    }
    let omega_i_axis = wavelength_axis(lambda_i_range, n)?;
    let omega_s_axis = wavelength_axis(lambda_s_range, n)?;
    let mut values = Vec::with_capacity(n * n);
    for wi in omega_i_axis.iter() {
        for ws in omega_s_axis.iter() {
            values.push(response(
                model,
                AngularFrequency(wi),
                AngularFrequency(ws),
                AngularFrequency(wi + ws),
            ));
        }
    }
    Ok(ResponseGrid {
        omega_i_axis,
        omega_s_axis,
        values,
    })
}

/// Location of the largest `|L|`. Ties go to the smallest `ωi`, then the
/// smallest `ωs`.
pub fn response_argmax(grid: &ResponseGrid) -> (AngularFrequency, AngularFrequency) {
    let ns = grid.omega_s_axis.len();
    let mut best = (0usize, 0usize);
    let mut best_val = f64::NEG_INFINITY;
    for i in 0..grid.omega_i_axis.len() {
        for s in 0..ns {
            let v = grid.values[i * ns + s].norm();
            if v > best_val {
                best_val = v;
                best = (i, s);
            }
        }
    }
    (
        AngularFrequency(grid.omega_i_axis.at(best.0)),
        AngularFrequency(grid.omega_s_axis.at(best.1)),
    )
}
