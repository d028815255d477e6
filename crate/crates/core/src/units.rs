//! Unit-carrying scalars and uniform frequency grids.
//!
//! Everything inside the crate works in angular frequency (rad/s) and degrees
//! Celsius. Wavelengths (nm) and ordinary frequencies (THz, GHz) only appear at
//! the boundaries.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{argument, Error, Result};

/// Vacuum speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Angular frequency in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct AngularFrequency(pub f64);

impl AngularFrequency {
    pub const fn new(rad_per_s: f64) -> Self {
        Self(rad_per_s)
    }

    /// `2π × f` for `f` given in THz.
    pub fn from_thz(thz: f64) -> Self {
        Self(2.0 * PI * thz * 1e12)
    }

    /// `2π × f` for `f` given in GHz.
    pub fn from_ghz(ghz: f64) -> Self {
        Self(2.0 * PI * ghz * 1e9)
    }

    pub fn from_wavelength_nm(lambda_nm: f64) -> Result<Self> {
        wavelength_to_omega(lambda_nm)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Ordinary frequency `ω/2π` in THz.
    pub fn thz(self) -> f64 {
        self.0 / (2.0 * PI * 1e12)
    }

    pub fn wavelength_nm(self) -> Result<f64> {
        omega_to_wavelength(self)
    }
}

impl std::ops::Add for AngularFrequency {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self(self.0 + rhs.0)
    }
}

impl std::ops::Sub for AngularFrequency {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self(self.0 - rhs.0)
    }
}

impl fmt::Display for AngularFrequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "2π × {:.4} THz", self.thz())
    }
}

/// Temperature in degrees Celsius.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Temperature(pub f64);

impl Temperature {
    pub const fn celsius(value: f64) -> Self {
        Self(value)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for Temperature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} °C", self.0)
    }
}

/// Converts a vacuum wavelength in nm to angular frequency `2πc/λ`.
pub fn wavelength_to_omega(lambda_nm: f64) -> Result<AngularFrequency> {
    if !(lambda_nm > 0.0) || !lambda_nm.is_finite() {
        return Err(Error::Domain {
            quantity: "wavelength (nm)",
            value: lambda_nm,
            bound: "must be positive and finite".into(),
        });
    }
    Ok(AngularFrequency(
        2.0 * PI * SPEED_OF_LIGHT / (lambda_nm * 1e-9),
    ))
}

/// Converts angular frequency back to vacuum wavelength in nm.
pub fn omega_to_wavelength(omega: AngularFrequency) -> Result<f64> {
    if !(omega.0 > 0.0) || !omega.0.is_finite() {
        return Err(Error::Domain {
            quantity: "angular frequency (rad/s)",
            value: omega.0,
            bound: "must be positive and finite".into(),
        });
    }
    Ok(2.0 * PI * SPEED_OF_LIGHT / omega.0 * 1e9)
}

/// Uniformly spaced, strictly increasing set of angular frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    start: f64,
    spacing: f64,
    len: usize,
}

impl FrequencyGrid {
    /// Grid of `n` points spanning `[start, end]` inclusive.
    pub fn linspace(start: f64, end: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(argument(format!("grid needs at least 2 points, got {n}")));
        }
        if !(end > start) || !start.is_finite() || !end.is_finite() {
            return Err(argument(format!(
                "grid bounds must be finite and increasing, got [{start}, {end}]"
            )));
        }
        Ok(Self {
            start,
            spacing: (end - start) / (n - 1) as f64,
            len: n,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Uniform spacing in rad/s.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn first(&self) -> f64 {
        self.start
    }

    pub fn last(&self) -> f64 {
        self.at(self.len - 1)
    }

    /// Midpoint of the grid range.
    pub fn center(&self) -> f64 {
        0.5 * (self.first() + self.last())
    }

    /// Value of the `i`-th node. Computed from the start so that the last node
    /// lands on the requested endpoint without accumulated drift.
    #[inline]
    pub fn at(&self, i: usize) -> f64 {
        self.start + self.spacing * i as f64
    }

    pub fn points(&self) -> Vec<AngularFrequency> {
        self.iter().map(AngularFrequency).collect()
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.len).map(move |i| self.at(i))
    }

    /// Same range with `2(n-1)+1` points; every old node is also a node of the
    /// refined grid.
    pub fn refined(&self) -> Self {
        Self {
            start: self.start,
            spacing: self.spacing / 2.0,
            len: 2 * (self.len - 1) + 1,
        }
    }

    /// Grid translated by `delta` rad/s.
    pub fn shifted(&self, delta: f64) -> Self {
        Self {
            start: self.start + delta,
            ..self.clone()
        }
    }

    /// Trapezoid weights (1/2 at the ends, 1 inside), without the spacing.
    #[inline]
    pub fn trapezoid_weight(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.len {
            0.5
        } else {
            1.0
        }
    }
}

/// Uniform grid of `n` points over `[center − half_width, center + half_width]`.
pub fn make_grid(center: AngularFrequency, half_width: f64, n: usize) -> Result<FrequencyGrid> {
    if !(half_width > 0.0) {
        return Err(argument(format!(
            "grid half width must be positive, got {half_width}"
        )));
    }
    if n < 2 {
        return Err(argument(format!("grid needs at least 2 points, got {n}")));
    }
    FrequencyGrid::linspace(center.0 - half_width, center.0 + half_width, n)
}
