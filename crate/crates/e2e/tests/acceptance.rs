//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::ffi::{OsStr, OsString};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use etpa_cli::{execute, Execution};
use etpa_core::engine::ResponseWindow;
use etpa_core::fitting::{fit_cross_section, RateDataset, RateRecord};
use etpa_core::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const TABLE_SLOPES: [(f64, f64); 3] = [
    (35.0, 0.064_142_87),
    (36.0, 0.229_980_89),
    (37.0, 0.035_281_43),
];

struct Report {
    lines: Vec<(u32, bool, String)>,
}

impl Report {
    fn record(&mut self, id: u32, pass: bool, detail: String) {
        println!(
            "criterion {id:>2}: {} {detail}",
            if pass { "PASS" } else { "FAIL" }
        );
        self.lines.push((id, pass, detail));
    }
}

fn shipped_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/nile_red_ppln.toml")
}

fn etpa_with<S: AsRef<OsStr>>(args: &[S]) -> Execution {
    let mut argv: Vec<OsString> = vec!["etpa".into()];
    argv.extend(args.iter().map(|a| a.as_ref().to_os_string()));
    execute(argv)
}

fn etpa(args: &[&str], out: &Path) -> Execution {
    let mut argv: Vec<OsString> = vec![
        "--config".into(),
        shipped_config().into(),
        "--out".into(),
        out.into(),
    ];
    argv.extend(args.iter().map(OsString::from));
    etpa_with(&argv)
}

fn stdout_value(out: &Execution, key: &str) -> Option<f64> {
    out.stdout
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")).map(str::to_owned))
        .and_then(|v| v.trim().parse().ok())
}

fn dir_snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .map(|rd| {
            rd.map(|e| {
                let e = e.unwrap();
                (
                    e.file_name().to_string_lossy().into_owned(),
                    fs::read(e.path()).unwrap(),
                )
            })
            .collect()
        })
        .unwrap_or_default();
    files.sort();
    files
}

/// Pair rates whose least-squares line is exactly `slope·x + intercept`:
/// seeded noise with its projection onto `[1, x]` removed.
fn synthetic_rates(slope: f64, intercept: f64, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 150.0).unwrap();
    let x: Vec<f64> = (0..15).map(|i| 2.0e4 + 4.0e3 * i as f64).collect();
    let mut e: Vec<f64> = x.iter().map(|_| noise.sample(&mut rng)).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let me = e.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxe: f64 = x.iter().zip(&e).map(|(v, w)| (v - mx) * (w - me)).sum();
    for (w, v) in e.iter_mut().zip(&x) {
        *w -= me + sxe / sxx * (v - mx);
    }
    x.iter()
        .zip(&e)
        .map(|(&v, &w)| (v, v - (slope * v + intercept + w)))
        .collect()
}

fn write_rate_file(path: &Path, rows: &[(f64, f64)]) {
    let mut s = String::from("r_solv_cps,r_samp_cps\n");
    for (a, b) in rows {
        s.push_str(&format!("{a:.17e},{b:.17e}\n"));
    }
    fs::write(path, s).unwrap();
}

fn write_power_file(path: &Path, rows: &[(f64, f64)]) {
    let mut s = String::from("power_mw,rate_cps\n");
    for (a, b) in rows {
        s.push_str(&format!("{a:.17e},{b:.17e}\n"));
    }
    fs::write(path, s).unwrap();
}

fn read_report(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            l.split(',')
                .map(|v| v.parse().unwrap_or(f64::NAN))
                .collect()
        })
        .collect()
}

fn max_pointwise(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn main() {
    let work = tempfile::tempdir().unwrap();
    let root = work.path();
    let mut report = Report { lines: Vec::new() };

    // 1: shipped presets through the CLI
    let sweep_a = root.join("sweep_a");
    let start = Instant::now();
    let out = etpa(&["sweep", "--refine"], &sweep_a);
    let elapsed = start.elapsed();
    let optimum = stdout_value(&out, "optimal_T_C");
    let pass = out.code == 0
        && optimum.is_some_and(|t| (t - 35.7).abs() <= 0.5)
        && elapsed < Duration::from_secs(60);
    report.record(
        1,
        pass,
        format!(
            "refined optimum {optimum:?} °C (target 35.7 ± 0.5) in {:.1} s (limit 60 s)",
            elapsed.as_secs_f64()
        ),
    );

    // Library-side sweep shared by criteria 2, 4, 5 and 6.
    let (crystal, pump) = reference_source();
    let grid = GridConfig::default();
    let temps = SweepRange::default().temperatures().unwrap();
    let base = MoleculeModel::nile_red();
    let bilinear = [0.1, 3.0, 100.0];
    let gammas = [2.0, 0.5];
    let dipole_factors = [0.01, 0.1, 1.0, 10.0, 100.0];
    let mut models = vec![base.clone()];
    models.extend(bilinear.iter().map(|&s| base.with_scaled_dipoles(s)));
    models.extend(gammas.iter().map(|&g| base.with_scaled_linewidths(g)));
    let mut dipole_pairs = Vec::new();
    for &a in &dipole_factors {
        for &b in &dipole_factors {
            if a != 1.0 || b != 1.0 {
                dipole_pairs.push((a, b));
                models.push(base.with_scaled_dipole(0, a).with_scaled_dipole(1, b));
            }
        }
    }
    let curves = sweep_temperatures(&models, &crystal, &pump, &temps, &grid).unwrap();
    let base_curve = &curves[0];
    let at = |t: f64| {
        base_curve
            .points
            .iter()
            .find(|p| (p.temperature.0 - t).abs() < 1e-9)
            .map(|p| p.probability)
            .unwrap()
    };

    // 2
    let (p35, p36, p37) = (at(35.0), at(36.0), at(37.0));
    report.record(
        2,
        p36 > p35 && p35 > p37,
        format!(
            "P(35) = {p35:.4e}, P(36) = {p36:.4e}, P(37) = {p37:.4e}; need P(36) > P(35) > P(37)"
        ),
    );

    // 3
    let root_t = degenerate_pm_temperature(
        &crystal,
        pump.degenerate_omega(),
        Temperature(25.0),
        Temperature(60.0),
    );
    let uncalibrated = degenerate_pm_temperature(
        &crystal.clone().with_temperature_offset(0.0),
        pump.degenerate_omega(),
        Temperature(20.0),
        Temperature(200.0),
    );
    let spectrum_at = |t: f64| {
        let jsa = build_jsa(&crystal, &pump, Temperature(t), &grid).unwrap();
        single_photon_spectrum(&jsa, SpectrumMode::Coherent)
    };
    let (pass, detail) = match root_t {
        Ok(root) => {
            let below: Vec<(f64, Vec<f64>)> = [
                root.0 - 1.0,
                root.0 - 0.75,
                root.0 - 0.5,
                root.0 - 0.25,
                root.0 - 0.1,
            ]
            .iter()
            .map(|&t| (t, spectrum_at(t).lobes(0.5)))
            .collect();
            let single = below
                .iter()
                .all(|(_, l)| l.len() == 1 && (l[0] - 1064.0).abs() <= 3.0);
            // Further below, the centre of the coherent spectrum sits on a
            // zero of the sinc and side lobes take over; reported only.
            let far_below = spectrum_at(root.0 - 1.5).lobes(0.5);
            let split = spectrum_at(37.5).lobes(0.5);
            let separated = split.len() == 2 && split[1] - split[0] >= 30.0;
            (
                (root.0 - 34.5).abs() <= 1.5 && single && separated,
                format!(
                    "root {:.3} °C (34.5 ± 1.5; uncalibrated dispersion gives {:.2} °C); peaks below root {:?}; peaks at 37.5 °C {:?}; at root − 1.5 °C (side-lobe regime, not checked) {:?}",
                    root.0,
                    uncalibrated.map(|t| t.0).unwrap_or(f64::NAN),
                    below.iter().map(|(t, l)| (format!("{t:.2}"), l.clone())).collect::<Vec<_>>(),
                    split,
                    far_below
                ),
            )
        }
        Err(e) => (false, format!("root search failed: {e}")),
    };
    report.record(3, pass, detail);

    // 4
    let t_opt = optimal_temperature(base_curve, true).unwrap();
    let penalty = detuning_penalty(
        &base,
        &crystal,
        &pump,
        t_opt,
        &grid,
        &ResponseWindow::default(),
    );
    report.record(
        4,
        penalty.as_ref().is_ok_and(|p| (0.02..=0.12).contains(p)),
        format!(
            "penalty {penalty:?} at {:.3} °C (target [0.02, 0.12])",
            t_opt.0
        ),
    );

    // 5
    let mut worst: f64 = 0.0;
    for (k, s) in bilinear.iter().enumerate() {
        for (p, q) in curves[1 + k].points.iter().zip(&base_curve.points) {
            worst = worst.max((p.probability / (s * s * q.probability) - 1.0).abs());
        }
    }
    report.record(
        5,
        worst < 1e-10,
        format!("max |P(sD)/(s²P(D)) − 1| = {worst:.3e} (limit 1e-10)"),
    );

    // 6
    let gamma_shift = gammas
        .iter()
        .enumerate()
        .map(|(k, _)| {
            (optimal_temperature(&curves[1 + bilinear.len() + k], true)
                .unwrap()
                .0
                - t_opt.0)
                .abs()
        })
        .fold(0.0, f64::max);
    let reference_shape = base_curve.normalized();
    let offset = 1 + bilinear.len() + gammas.len();
    let (shape_dev, worst_pair) = dipole_pairs
        .iter()
        .enumerate()
        .map(|(k, pair)| {
            (
                max_pointwise(&curves[offset + k].normalized(), &reference_shape),
                *pair,
            )
        })
        .fold(
            (0.0, (1.0, 1.0)),
            |acc, x| if x.0 > acc.0 { x } else { acc },
        );
    report.record(
        6,
        gamma_shift < 0.3 && shape_dev < 0.05,
        format!(
            "γ×2, γ×0.5 move the optimum by ≤ {gamma_shift:.3} °C (limit 0.3); D rescaling changes the normalised curve by ≤ {shape_dev:.4} (limit 0.05, worst at D1×{}, D2×{})",
            worst_pair.0, worst_pair.1
        ),
    );

    // 7
    let conv_out = etpa(&["sweep", "--convergence-check"], &root.join("conv"));
    let change = stdout_value(&conv_out, "max_relative_change");
    report.record(
        7,
        conv_out.code == 0 && change.is_some_and(|c| c < 5e-3),
        format!("max relative change on grid doubling {change:?} (limit 5e-3)"),
    );

    // 8
    let fit_dir = root.join("fit");
    fs::create_dir_all(&fit_dir).unwrap();
    let mut files = Vec::new();
    for (i, (t, slope)) in TABLE_SLOPES.iter().enumerate() {
        let path = fit_dir.join(format!("rates_{t}.csv"));
        write_rate_file(
            &path,
            &synthetic_rates(*slope, 40.0 - 25.0 * i as f64, 11 + i as u64),
        );
        files.push(path);
    }
    let temps_arg = TABLE_SLOPES
        .iter()
        .map(|(t, _)| t.to_string())
        .collect::<Vec<_>>()
        .join(",");
    let run_fit = |out: &Path| {
        let mut argv: Vec<OsString> = vec![
            "--config".into(),
            shipped_config().into(),
            "--out".into(),
            out.into(),
            "fit".into(),
        ];
        argv.extend(files.iter().map(OsString::from));
        argv.push("--temps".into());
        argv.push(temps_arg.clone().into());
        etpa_with(&argv)
    };
    let fit_out = run_fit(&root.join("fit_a"));
    let rows = if fit_out.code == 0 {
        read_report(&root.join("fit_a/fit_report.csv"))
    } else {
        Vec::new()
    };
    let slope_err = if rows.len() == 3 {
        rows.iter()
            .zip(TABLE_SLOPES)
            .map(|(r, (_, s))| (r[1] / s - 1.0).abs())
            .fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    let library_fits: Vec<(f64, f64)> = TABLE_SLOPES
        .iter()
        .enumerate()
        .map(|(i, (_, s))| {
            let records = synthetic_rates(*s, 40.0 - 25.0 * i as f64, 11 + i as u64)
                .into_iter()
                .map(|(a, b)| RateRecord {
                    r_solv: a,
                    r_samp: b,
                    pump_power_mw: None,
                })
                .collect();
            let fit =
                fit_cross_section(&RateDataset::new(records, 0.5e-3, 2.0).unwrap(), false).unwrap();
            (fit.slope, fit.sigma_e_cm2)
        })
        .collect();
    let mut ratio_err: f64 = 0.0;
    for (si, sig_i) in &library_fits {
        for (sj, sig_j) in &library_fits {
            ratio_err = ratio_err.max((sig_i / sig_j / (si / sj) - 1.0).abs());
        }
    }
    let sigma: Vec<f64> = library_fits.iter().map(|f| f.1).collect();
    report.record(
        8,
        slope_err < 1e-6 && ratio_err < 1e-9,
        format!(
            "slope recovery {slope_err:.2e} (limit 1e-6); σ ratio vs slope ratio {ratio_err:.2e} (limit 1e-9); σ(36)/σ(35) = {:.4}",
            sigma[1] / sigma[0]
        ),
    );

    // 9
    let exact: Vec<(f64, f64)> = (1..=12)
        .map(|i| (0.5 * i as f64, 7.0 * (0.5 * i as f64).powi(2)))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let noise = Normal::new(0.0, 0.01).unwrap();
    let noisy: Vec<(f64, f64)> = exact
        .iter()
        .map(|&(x, y)| (x, y * (1.0 + noise.sample(&mut rng))))
        .collect();
    let exact_path = root.join("power_exact.csv");
    let noisy_path = root.join("power_noisy.csv");
    write_power_file(&exact_path, &exact);
    write_power_file(&noisy_path, &noisy);
    let power = |p: &Path| etpa_with(&[OsStr::new("power"), p.as_os_str()]);
    let e_out = power(&exact_path);
    let n_out = power(&noisy_path);
    let e_exp = stdout_value(&e_out, "exponent");
    let n_exp = stdout_value(&n_out, "exponent");
    report.record(
        9,
        e_exp.is_some_and(|v| (v - 2.0).abs() <= 1e-9)
            && n_exp.is_some_and(|v| (v - 2.0).abs() <= 0.05),
        format!("exact quadratic → {e_exp:?} (2 ± 1e-9); 1 % noise → {n_exp:?} (2 ± 0.05)"),
    );

    // 10
    let mut mismatched = Vec::new();
    let sweep_b = root.join("sweep_b");
    let out_b = etpa(&["sweep", "--refine"], &sweep_b);
    if out.stdout != out_b.stdout || dir_snapshot(&sweep_a) != dir_snapshot(&sweep_b) {
        mismatched.push("sweep");
    }
    for (name, args) in [
        ("response", vec!["response"]),
        ("spectrum", vec!["spectrum", "--temps", "34,37.5"]),
    ] {
        let a = etpa(&args, &root.join(format!("{name}_a")));
        let b = etpa(&args, &root.join(format!("{name}_b")));
        if !a.code == 0
            || a.stdout != b.stdout
            || dir_snapshot(&root.join(format!("{name}_a")))
                != dir_snapshot(&root.join(format!("{name}_b")))
        {
            mismatched.push(name);
        }
    }
    let fit_b = run_fit(&root.join("fit_b"));
    if !fit_out.code == 0
        || fit_out.stdout != fit_b.stdout
        || dir_snapshot(&root.join("fit_a")) != dir_snapshot(&root.join("fit_b"))
    {
        mismatched.push("fit");
    }
    if n_out.stdout != power(&noisy_path).stdout {
        mismatched.push("power");
    }
    report.record(
        10,
        mismatched.is_empty(),
        if mismatched.is_empty() {
            "response, spectrum, sweep, fit and power repeat byte for byte".to_owned()
        } else {
            format!("outputs differ between runs: {mismatched:?}")
        },
    );

    let failed: Vec<u32> = report.lines.iter().filter(|l| !l.1).map(|l| l.0).collect();
    println!(
        "acceptance: {} of {} criteria pass",
        report.lines.len() - failed.len(),
        report.lines.len()
    );
    if !failed.is_empty() {
        println!("failing criteria: {failed:?}");
        std::process::exit(1);
    }
}
