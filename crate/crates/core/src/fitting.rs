//! Reduction of measured pair-count rates to absorption cross sections, plus
//! the small regression utilities used alongside it (power-law exponents and
//! cubic trend lines).

use nalgebra::{DMatrix, DVector};

use crate::error::{argument, Error, Result};

/// Avogadro constant, 1/mol.
pub const AVOGADRO: f64 = 6.022_140_76e23;

/// Coincidence rates through solvent and sample at one pump setting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateRecord {
    /// Counts/s transmitted through the pure solvent.
    pub r_solv: f64,
    /// Counts/s transmitted through the dissolved sample.
    pub r_samp: f64,
    /// Pump power in mW, if recorded.
    pub pump_power_mw: Option<f64>,
}

/// One crystal temperature's worth of rate measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct RateDataset {
    pub records: Vec<RateRecord>,
    /// Sample concentration, mol/L.
    pub concentration_mol_l: f64,
    /// Optical path length through the cuvette, mm.
    pub path_length_mm: f64,
    pub temperature_c: Option<f64>,
}

impl RateDataset {
    pub fn new(
        records: Vec<RateRecord>,
        concentration_mol_l: f64,
        path_length_mm: f64,
    ) -> Result<Self> {
        if !(concentration_mol_l > 0.0) || !(path_length_mm > 0.0) {
            return Err(argument(format!(
                "concentration and path length must be positive, got c = {concentration_mol_l} mol/L, L = {path_length_mm} mm"
            )));
        }
        if let Some(r) = records
            .iter()
            .find(|r| !(r.r_solv >= 0.0) || !(r.r_samp >= 0.0))
        {
            return Err(argument(format!(
                "rates must be non-negative, got ({}, {})",
                r.r_solv, r.r_samp
            )));
        }
        Ok(Self {
            records,
            concentration_mol_l,
            path_length_mm,
            temperature_c: None,
        })
    }

    pub fn with_temperature(mut self, t: f64) -> Self {
        self.temperature_c = Some(t);
        self
    }
}

/// Affine count-rate correction: `(raw − dark) / efficiency`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateCorrection {
    pub dark_cps: f64,
    pub efficiency: f64,
}

impl Default for RateCorrection {
    fn default() -> Self {
        Self {
            dark_cps: 0.0,
            efficiency: 1.0,
        }
    }
}

impl RateCorrection {
    pub fn apply(&self, raw: f64) -> f64 {
        (raw - self.dark_cps) / self.efficiency
    }
}

/// `(r_solv, r_abs)` with `r_abs = r_solv − r_samp`, in record order.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorptionRates {
    pub pairs: Vec<(f64, f64)>,
    /// Indices of records whose absorption rate came out negative. They are
    /// kept in `pairs`.
    pub negative: Vec<usize>,
}

pub fn absorption_rates(dataset: &RateDataset) -> Result<AbsorptionRates> {
    if dataset.records.is_empty() {
        return Err(argument("rate dataset is empty"));
    }
    let pairs: Vec<(f64, f64)> = dataset
        .records
        .iter()
        .map(|r| (r.r_solv, r.r_solv - r.r_samp))
        .collect();
    let negative = pairs
        .iter()
        .enumerate()
        .filter(|(_, p)| p.1 < 0.0)
        .map(|(i, _)| i)
        .collect();
    Ok(AbsorptionRates { pairs, negative })
}

/// Ordinary least-squares line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope; needs one more point than parameters.
    pub slope_stderr: Option<f64>,
}

/// Fits `y = a·x + b` (or `y = a·x` with `through_origin`).
pub fn linear_slope(pairs: &[(f64, f64)], through_origin: bool) -> Result<LineFit> {
    let n = pairs.len();
    let min_points = if through_origin { 1 } else { 2 };
    if n < min_points.max(2) {
        return Err(argument(format!(
            "line fit needs at least 2 points, got {n}"
        )));
    }
    if pairs.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(argument("line fit input contains non-finite values"));
    }
    let nf = n as f64;
    if through_origin {
        let sxx: f64 = pairs.iter().map(|p| p.0 * p.0).sum();
        if sxx == 0.0 {
            return Err(Error::SingularFit("all x values are zero".into()));
        }
        let sxy: f64 = pairs.iter().map(|p| p.0 * p.1).sum();
        let slope = sxy / sxx;
        let ssr: f64 = pairs.iter().map(|p| (p.1 - slope * p.0).powi(2)).sum();
        let slope_stderr = (n >= 2).then(|| (ssr / (nf - 1.0) / sxx).sqrt());
        return Ok(LineFit {
            slope,
            intercept: 0.0,
            slope_stderr,
        });
    }
    let mean_x = pairs.iter().map(|p| p.0).sum::<f64>() / nf;
    let mean_y = pairs.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pairs.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::SingularFit("all x values are equal".into()));
    }
    let sxy: f64 = pairs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let slope_stderr = (n >= 3).then(|| {
        let ssr: f64 = pairs
            .iter()
            .map(|p| (p.1 - intercept - slope * p.0).powi(2))
            .sum();
        (ssr / (nf - 2.0) / sxx).sqrt()
    });
    Ok(LineFit {
        slope,
        intercept,
        slope_stderr,
    })
}

/// Cross section `σe = slope / (c·L·N_A)` in cm², with the concentration taken
/// to mol/cm³ and the path length to cm.
pub fn cross_section(slope: f64, concentration_mol_l: f64, path_length_mm: f64) -> Result<f64> {
    if !slope.is_finite() {
        return Err(argument(format!("slope must be finite, got {slope}")));
    }
    if !(concentration_mol_l > 0.0) || !(path_length_mm > 0.0) {
        return Err(argument(format!(
            "concentration and path length must be positive, got c = {concentration_mol_l} mol/L, L = {path_length_mm} mm"
        )));
    }
    let c_mol_cm3 = concentration_mol_l / 1000.0;
    let l_cm = path_length_mm / 10.0;
    Ok(slope / (c_mol_cm3 * l_cm * AVOGADRO))
}

/// Slope fit of one dataset together with its cross section.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossSectionResult {
    pub slope: f64,
    pub slope_stderr: Option<f64>,
    pub intercept: f64,
    pub sigma_e_cm2: f64,
}

pub fn fit_cross_section(
    dataset: &RateDataset,
    through_origin: bool,
) -> Result<CrossSectionResult> {
    let rates = absorption_rates(dataset)?;
    let line = linear_slope(&rates.pairs, through_origin)?;
    Ok(CrossSectionResult {
        slope: line.slope,
        slope_stderr: line.slope_stderr,
        intercept: line.intercept,
        sigma_e_cm2: cross_section(
            line.slope,
            dataset.concentration_mol_l,
            dataset.path_length_mm,
        )?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawResult {
    pub exponent: f64,
    pub amplitude: f64,
    pub exponent_stderr: f64,
}

/// Fits `y = amplitude · x^exponent` by least squares on `(ln x, ln y)`.
pub fn power_law_exponent(pairs: &[(f64, f64)]) -> Result<PowerLawResult> {
    if pairs.len() < 3 {
        return Err(argument(format!(
            "power-law fit needs at least 3 points, got {}",
            pairs.len()
        )));
    }
    if let Some(&(x, y)) = pairs.iter().find(|(x, y)| !(*x > 0.0) || !(*y > 0.0)) {
        return Err(Error::Domain {
            quantity: "power-law data",
            value: if x > 0.0 { y } else { x },
            bound: "all values must be strictly positive".into(),
        });
    }
    let logs: Vec<(f64, f64)> = pairs.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let line = linear_slope(&logs, false)?;
    Ok(PowerLawResult {
        exponent: line.slope,
        amplitude: line.intercept.exp(),
        exponent_stderr: line.slope_stderr.unwrap_or(0.0),
    })
}

/// Least-squares cubic. Solved in a centred, scaled variable for
/// conditioning; `coefficients` re-expands to powers of `T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicFit {
    center: f64,
    scale: f64,
    /// Coefficients in `u = (T − center)/scale`, constant term first.
    local: [f64; 4],
}

impl CubicFit {
    pub fn eval(&self, t: f64) -> f64 {
        let u = (t - self.center) / self.scale;
        self.local[0] + u * (self.local[1] + u * (self.local[2] + u * self.local[3]))
    }

    /// `[c3, c2, c1, c0]` of `c3·T³ + c2·T² + c1·T + c0`.
    pub fn coefficients(&self) -> [f64; 4] {
        let [a0, a1, a2, a3] = self.local;
        let (c, s) = (self.center, self.scale);
        let s2 = s * s;
        let s3 = s2 * s;
        [
            a3 / s3,
            a2 / s2 - 3.0 * a3 * c / s3,
            a1 / s - 2.0 * a2 * c / s2 + 3.0 * a3 * c * c / s3,
            a0 - a1 * c / s + a2 * c * c / s2 - a3 * c * c * c / s3,
        ]
    }
}

pub fn cubic_trend(points: &[(f64, f64)]) -> Result<CubicFit> {
    let n = points.len();
    if n < 4 {
        return Err(argument(format!(
            "cubic fit needs at least 4 points, got {n}"
        )));
    }
    let min = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let max = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let center = 0.5 * (min + max);
    let scale = 0.5 * (max - min);
    if !(scale > 0.0) {
        return Err(Error::SingularFit("all abscissae are equal".into()));
    }
    let a = DMatrix::from_fn(n, 4, |r, c| ((points[r].0 - center) / scale).powi(c as i32));
    let b = DVector::from_iterator(n, points.iter().map(|p| p.1));
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-12 * smax) {
        return Err(Error::SingularFit(
            "fewer than 4 distinct abscissae for a cubic".into(),
        ));
    }
    let x = svd
        .solve(&b, 0.0)
        .map_err(|e| Error::SingularFit(e.to_string()))?;
    Ok(CubicFit {
        center,
        scale,
        local: [x[0], x[1], x[2], x[3]],
    })
}
