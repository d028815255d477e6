use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use etpa_core::engine::max_relative_change;
use etpa_core::fitting::{
    absorption_rates, cross_section, cubic_trend, linear_slope, power_law_exponent, RateDataset,
};
use etpa_core::io::{self, sci, FitRow};
use etpa_core::molecule::{response_argmax, response_map};
use etpa_core::units::omega_to_wavelength;
use etpa_core::{
    build_jsa, optimal_temperature, single_photon_spectrum, sweep_temperatures, AngularFrequency,
    Error, Temperature,
};
use serde::Serialize;

use crate::config::Setup;
use crate::CliError;

fn config_err(e: Error) -> CliError {
    CliError::Config(e.to_string())
}

fn data_err(file: &Path) -> impl Fn(Error) -> CliError + '_ {
    move |e| CliError::Data(format!("{}: {e}", file.display()))
}

/// Files are rendered in memory and only written once every computation has
/// succeeded.
struct Outputs {
    dir: PathBuf,
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    fn new(dir: &Path) -> Self {
        Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        }
    }

    fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    fn write(self) -> Result<(), CliError> {
        fs::create_dir_all(&self.dir)
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", self.dir.display())))?;
        for (name, bytes) in self.files {
            let path = self.dir.join(&name);
            fs::write(&path, bytes)
                .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
            eprintln!("wrote {}", path.display());
        }
        Ok(())
    }
}

fn render<F>(f: F) -> Result<Vec<u8>, CliError>
where
    F: FnOnce(&mut Vec<u8>) -> etpa_core::Result<()>,
{
    let mut buf = Vec::new();
    f(&mut buf).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(buf)
}

fn wavelength(omega: f64) -> Result<f64, CliError> {
    omega_to_wavelength(AngularFrequency(omega)).map_err(config_err)
}

#[derive(Serialize)]
struct ResponseSidecar {
    maximum: ResponseMaximum,
    pump_line: PumpLine,
}

#[derive(Serialize)]
struct ResponseMaximum {
    lambda_i_nm: f64,
    lambda_s_nm: f64,
    sum_wavelength_nm: f64,
    abs_l: f64,
}

/// Points with `1/λi + 1/λs = 1/sum_wavelength_nm`.
#[derive(Serialize)]
struct PumpLine {
    sum_wavelength_nm: f64,
}

pub fn response(setup: &Setup, stdout: &mut String) -> Result<(), CliError> {
    let w = &setup.response;
    let range = (w.lambda_min_nm, w.lambda_max_nm);
    let map = response_map(&setup.molecule, range, range, w.n).map_err(config_err)?;
    if setup.molecule.is_dark() {
        eprintln!("warning: every dipole product is zero; the response map is identically zero");
    }
    let (wi, ws) = response_argmax(&map);
    let sidecar = ResponseSidecar {
        maximum: ResponseMaximum {
            lambda_i_nm: wavelength(wi.0)?,
            lambda_s_nm: wavelength(ws.0)?,
            sum_wavelength_nm: wavelength((wi + ws).0)?,
            abs_l: map.max_abs(),
        },
        pump_line: PumpLine {
            sum_wavelength_nm: wavelength(setup.pump.center.0)?,
        },
    };
    let mut out = Outputs::new(&setup.out_dir);
    out.add(
        "response_map.csv",
        render(|b| io::write_response_csv(&map, b))?,
    );
    out.add(
        "response_map.toml",
        toml::to_string(&sidecar)
            .expect("sidecar serializes")
            .into_bytes(),
    );
    let _ = writeln!(
        stdout,
        "response_max_lambda_nm={:.3},{:.3}",
        sidecar.maximum.lambda_i_nm, sidecar.maximum.lambda_s_nm
    );
    out.write()
}

pub fn spectrum_file_name(t: f64) -> String {
    format!("spectrum_T{t:.2}C.csv")
}

pub fn spectrum(setup: &Setup, temps: Option<&[f64]>, stdout: &mut String) -> Result<(), CliError> {
    let temps = temps.unwrap_or(&setup.spectrum_temperatures);
    if temps.is_empty() {
        return Err(CliError::Config(
            "spectrum: no temperatures requested".into(),
        ));
    }
    let mut out = Outputs::new(&setup.out_dir);
    for &t in temps {
        let jsa = build_jsa(&setup.crystal, &setup.pump, Temperature(t), &setup.grid)
            .map_err(|e| CliError::Config(format!("temperature {t} °C: {e}")))?;
        let s = single_photon_spectrum(&jsa, setup.spectrum_mode);
        let peaks: Vec<String> = s.lobes(0.5).iter().map(|l| format!("{l:.3}")).collect();
        let _ = writeln!(stdout, "T_C={t:.2} peaks_nm={}", peaks.join(","));
        out.add(
            spectrum_file_name(t),
            render(|b| io::write_spectrum_csv(&s, b))?,
        );
    }
    out.write()
}

pub fn sweep(
    setup: &Setup,
    refine: bool,
    convergence_check: bool,
    stdout: &mut String,
) -> Result<(), CliError> {
    let temps = setup.sweep.temperatures().map_err(config_err)?;
    let models = std::slice::from_ref(&setup.molecule);
    let curve = sweep_temperatures(models, &setup.crystal, &setup.pump, &temps, &setup.grid)
        .map_err(config_err)?
        .remove(0);
    if setup.molecule.is_dark() {
        eprintln!("warning: every dipole product is zero; the probability is identically zero");
    }
    let refine_now = refine && curve.points.len() >= 3;
    if refine && !refine_now {
        eprintln!("note: refinement skipped, it needs at least 3 temperatures");
    }
    let optimum = optimal_temperature(&curve, refine_now).map_err(config_err)?;

    let change = if convergence_check {
        let fine = sweep_temperatures(
            models,
            &setup.crystal,
            &setup.pump,
            &temps,
            &setup.grid.refined(),
        )
        .map_err(config_err)?
        .remove(0);
        Some(max_relative_change(&curve, &fine).map_err(config_err)?)
    } else {
        None
    };

    let mut out = Outputs::new(&setup.out_dir);
    out.add("sweep.csv", render(|b| io::write_curve_csv(&curve, b))?);
    out.add("sweep.toml", io::curve_metadata_toml(&curve).into_bytes());
    let _ = writeln!(stdout, "optimal_T_C={:.6}", optimum.0);
    if let Some(c) = change {
        let _ = writeln!(stdout, "max_relative_change={}", sci(c));
    }
    out.write()
}

pub fn fit(
    setup: &Setup,
    files: &[PathBuf],
    temps: Option<&[f64]>,
    through_origin: bool,
    stdout: &mut String,
) -> Result<(), CliError> {
    let temps = temps.ok_or_else(|| {
        CliError::Config("fit: --temps must list one temperature per file".into())
    })?;
    if temps.len() != files.len() {
        return Err(CliError::Config(format!(
            "fit: {} files but {} temperatures in --temps",
            files.len(),
            temps.len()
        )));
    }
    // Files sharing a temperature are pooled.
    let mut by_temperature: BTreeMap<u64, (f64, Vec<_>)> = BTreeMap::new();
    for (file, &t) in files.iter().zip(temps) {
        if !t.is_finite() {
            return Err(CliError::Config(format!(
                "fit: temperature {t} is not finite"
            )));
        }
        let f =
            fs::File::open(file).map_err(|e| CliError::Data(format!("{}: {e}", file.display())))?;
        let records = io::read_rate_csv(f, setup.correction).map_err(data_err(file))?;
        let key = ordered_key(t);
        by_temperature
            .entry(key)
            .or_insert((t, Vec::new()))
            .1
            .extend(records);
    }

    let mut rows = Vec::new();
    for (t, records) in by_temperature.into_values() {
        let dataset = RateDataset::new(records, setup.concentration_mol_l, setup.path_length_mm)
            .map_err(|e| CliError::Data(format!("{t} °C: {e}")))?
            .with_temperature(t);
        let rates =
            absorption_rates(&dataset).map_err(|e| CliError::Data(format!("{t} °C: {e}")))?;
        if !rates.negative.is_empty() {
            eprintln!(
                "warning: {t} °C: {} record(s) with negative absorption rate kept in the fit",
                rates.negative.len()
            );
        }
        let line = linear_slope(&rates.pairs, through_origin)
            .map_err(|e| CliError::Data(format!("{t} °C: {e}")))?;
        let sigma = cross_section(
            line.slope,
            dataset.concentration_mol_l,
            dataset.path_length_mm,
        )
        .map_err(|e| CliError::Data(format!("{t} °C: {e}")))?;
        rows.push(FitRow {
            temperature_c: t,
            slope: line.slope,
            slope_stderr: line.slope_stderr,
            intercept: line.intercept,
            sigma_e_cm2: sigma,
        });
    }

    let mut out = Outputs::new(&setup.out_dir);
    out.add(
        "fit_report.csv",
        render(|b| io::write_fit_report(&rows, b))?,
    );
    for r in &rows {
        let _ = writeln!(
            stdout,
            "T_C={} slope={} sigma_e_cm2={}",
            sci(r.temperature_c),
            sci(r.slope),
            sci(r.sigma_e_cm2)
        );
    }
    if rows.len() >= 4 {
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .map(|r| (r.temperature_c, r.sigma_e_cm2))
            .collect();
        let cubic = cubic_trend(&pts).map_err(|e| CliError::Data(e.to_string()))?;
        let c = cubic.coefficients();
        out.add("fit_trend.toml", trend_toml(c).into_bytes());
        let _ = writeln!(
            stdout,
            "cubic_sigma_e_coefficients={},{},{},{}",
            sci(c[0]),
            sci(c[1]),
            sci(c[2]),
            sci(c[3])
        );
    } else {
        eprintln!(
            "note: cubic trend skipped, it needs at least 4 temperatures (got {})",
            rows.len()
        );
    }
    out.write()
}

fn ordered_key(t: f64) -> u64 {
    // Monotone map from finite f64 to u64.
    let bits = t.to_bits();
    if t.is_sign_negative() {
        !bits
    } else {
        bits | (1 << 63)
    }
}

fn trend_toml(c: [f64; 4]) -> String {
    #[derive(Serialize)]
    struct Trend {
        variable: &'static str,
        quantity: &'static str,
        /// c3, c2, c1, c0
        coefficients: [f64; 4],
    }
    toml::to_string(&Trend {
        variable: "temperature_C",
        quantity: "sigma_e_cm2",
        coefficients: c,
    })
    .expect("trend serializes")
}

pub fn power(file: &Path, stdout: &mut String) -> Result<(), CliError> {
    let f = fs::File::open(file).map_err(|e| CliError::Data(format!("{}: {e}", file.display())))?;
    let pairs = io::read_pairs_csv(f).map_err(data_err(file))?;
    let fit = power_law_exponent(&pairs).map_err(data_err(file))?;
    let _ = writeln!(stdout, "exponent={:.9}", fit.exponent);
    let _ = writeln!(stdout, "exponent_stderr={}", sci(fit.exponent_stderr));
    let _ = writeln!(stdout, "amplitude={}", sci(fit.amplitude));
    Ok(())
}
