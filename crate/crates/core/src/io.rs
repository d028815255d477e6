//! CSV readers for measured rates and CSV/TOML writers for computed results.
//!
//! Numbers are written with `{:.8e}` (nine significant digits) so identical
//! inputs always give byte-identical files.

use std::io::{Read, Write};

use serde::Serialize;

use crate::engine::ProbabilityCurve;
use crate::error::{Error, Result};
use crate::fitting::{RateCorrection, RateRecord};
use crate::molecule::ResponseGrid;
use crate::source::{GridConfig, SinglePhotonSpectrum};
use crate::units::{omega_to_wavelength, AngularFrequency};

/// Formats a float to nine significant digits.
pub fn sci(x: f64) -> String {
    format!("{x:.8e}")
}

fn io_err(e: std::io::Error) -> Error {
    Error::Argument(format!("write failed: {e}"))
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input)
}

fn record_line(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    Error::Data {
        line,
        message: e.to_string(),
    }
}

fn parse_field(record: &csv::StringRecord, i: usize, name: &str) -> Result<f64> {
    let raw = record.get(i).unwrap_or("");
    raw.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Data {
            line: record_line(record),
            message: format!("column `{name}`: cannot parse {raw:?} as a number"),
        })
}

fn check_header(
    headers: &csv::StringRecord,
    expected: &[&str],
    optional: &[&str],
) -> Result<usize> {
    let got: Vec<&str> = headers.iter().collect();
    let n = got.len();
    let ok = n >= expected.len()
        && n <= expected.len() + optional.len()
        && got
            .iter()
            .zip(expected.iter().chain(optional))
            .all(|(g, e)| g == e);
    if !ok {
        let mut want = expected.join(",");
        for o in optional {
            want.push_str(&format!("[,{o}]"));
        }
        return Err(Error::Data {
            line: record_line(headers).max(1),
            message: format!("expected header `{want}`, got `{}`", got.join(",")),
        });
    }
    Ok(n)
}

/// Reads `r_solv_cps,r_samp_cps[,pump_power_mw]`. An optional correction is
/// applied to both rate columns.
pub fn read_rate_csv<R: Read>(
    input: R,
    correction: Option<RateCorrection>,
) -> Result<Vec<RateRecord>> {
    let mut rdr = reader(input);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    if headers.is_empty() {
        return Err(Error::Data {
            line: 1,
            message: "file is empty".into(),
        });
    }
    let width = check_header(&headers, &["r_solv_cps", "r_samp_cps"], &["pump_power_mw"])?;
    let corr = correction.unwrap_or_default();
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(csv_err)?;
        if row.len() != width {
            return Err(Error::Data {
                line: record_line(&row),
                message: format!("expected {width} fields, found {}", row.len()),
            });
        }
        let r_solv = corr.apply(parse_field(&row, 0, "r_solv_cps")?);
        let r_samp = corr.apply(parse_field(&row, 1, "r_samp_cps")?);
        let pump_power_mw = if width == 3 {
            Some(parse_field(&row, 2, "pump_power_mw")?)
        } else {
            None
        };
        out.push(RateRecord {
            r_solv,
            r_samp,
            pump_power_mw,
        });
    }
    if out.is_empty() {
        return Err(Error::Data {
            line: record_line(&headers).max(1),
            message: "no data rows".into(),
        });
    }
    Ok(out)
}

/// Reads a two-column `(x, y)` table; any header names are accepted.
pub fn read_pairs_csv<R: Read>(input: R) -> Result<Vec<(f64, f64)>> {
    let mut rdr = reader(input);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    if headers.len() != 2 {
        return Err(Error::Data {
            line: record_line(&headers).max(1),
            message: format!(
                "expected a two-column header, got {} columns",
                headers.len()
            ),
        });
    }
    let names: Vec<String> = headers.iter().map(str::to_owned).collect();
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(csv_err)?;
        if row.len() != 2 {
            return Err(Error::Data {
                line: record_line(&row),
                message: format!("expected 2 fields, found {}", row.len()),
            });
        }
        out.push((
            parse_field(&row, 0, &names[0])?,
            parse_field(&row, 1, &names[1])?,
        ));
    }
    if out.is_empty() {
        return Err(Error::Data {
            line: record_line(&headers).max(1),
            message: "no data rows".into(),
        });
    }
    Ok(out)
}

pub fn write_response_csv<W: Write>(grid: &ResponseGrid, mut out: W) -> Result<()> {
    writeln!(out, "lambda_i_nm,lambda_s_nm,abs_L").map_err(io_err)?;
    for (r, wi) in grid.omega_i_axis.iter().enumerate() {
        let li = omega_to_wavelength(AngularFrequency(wi))?;
        for (c, ws) in grid.omega_s_axis.iter().enumerate() {
            let ls = omega_to_wavelength(AngularFrequency(ws))?;
            writeln!(
                out,
                "{},{},{}",
                sci(li),
                sci(ls),
                sci(grid.get(r, c).norm())
            )
            .map_err(io_err)?;
        }
    }
    Ok(())
}

pub fn write_spectrum_csv<W: Write>(spectrum: &SinglePhotonSpectrum, mut out: W) -> Result<()> {
    writeln!(out, "lambda_nm,intensity_normalized").map_err(io_err)?;
    for (l, i) in spectrum.wavelength_rows() {
        writeln!(out, "{},{}", sci(l), sci(i)).map_err(io_err)?;
    }
    Ok(())
}

/// Writes `temperature_C,probability_rel`, normalised to the curve maximum.
pub fn write_curve_csv<W: Write>(curve: &ProbabilityCurve, mut out: W) -> Result<()> {
    writeln!(out, "temperature_C,probability_rel").map_err(io_err)?;
    for (t, p) in curve.temperatures().into_iter().zip(curve.normalized()) {
        writeln!(out, "{},{}", sci(t), sci(p)).map_err(io_err)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct CurveMetadata<'a> {
    fingerprint: &'a str,
    max_probability: f64,
    grid: &'a GridConfig,
}

/// Sidecar for a curve CSV: the grid used and the parameter fingerprint.
pub fn curve_metadata_toml(curve: &ProbabilityCurve) -> String {
    let max = curve.probabilities().into_iter().fold(0.0, f64::max);
    let meta = CurveMetadata {
        fingerprint: &curve.fingerprint,
        max_probability: max,
        grid: &curve.grid,
    };
    toml::to_string(&meta).expect("metadata is always representable")
}

/// One row of the cross-section report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitRow {
    pub temperature_c: f64,
    pub slope: f64,
    pub slope_stderr: Option<f64>,
    pub intercept: f64,
    pub sigma_e_cm2: f64,
}

/// Writes `temperature_C,slope,slope_stderr,intercept,sigma_e_cm2`; a missing
/// standard error is written as `nan`.
pub fn write_fit_report<W: Write>(rows: &[FitRow], mut out: W) -> Result<()> {
    writeln!(
        out,
        "temperature_C,slope,slope_stderr,intercept,sigma_e_cm2"
    )
    .map_err(io_err)?;
    for r in rows {
        let se = r.slope_stderr.map_or_else(|| "nan".to_owned(), sci);
        writeln!(
            out,
            "{},{},{},{},{}",
            sci(r.temperature_c),
            sci(r.slope),
            se,
            sci(r.intercept),
            sci(r.sigma_e_cm2)
        )
        .map_err(io_err)?;
    }
    Ok(())
}
