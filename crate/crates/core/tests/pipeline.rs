use etpa_core::engine::{max_relative_change, OverlapKernel};
use etpa_core::fitting::{fit_cross_section, RateDataset};
use etpa_core::io;
use etpa_core::*;

fn coarse_grid() -> GridConfig {
    GridConfig {
        n_omega0: 33,
        n_nu: 1025,
        ..GridConfig::default()
    }
}

fn temps(lo: f64, hi: f64, n: usize) -> Vec<Temperature> {
    SweepRange {
        t_min_c: lo,
        t_max_c: hi,
        n,
    }
    .temperatures()
    .unwrap()
}

#[test]
fn sweep_curve_round_trips_through_csv() {
    let (crystal, pump) = reference_source();
    let model = MoleculeModel::nile_red();
    let t = temps(34.0, 37.0, 7);
    let curve = sweep_temperatures(
        std::slice::from_ref(&model),
        &crystal,
        &pump,
        &t,
        &coarse_grid(),
    )
    .unwrap()
    .remove(0);

    let mut buf = Vec::new();
    io::write_curve_csv(&curve, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("temperature_C,probability_rel"));
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 7);
    for ((tc, p), want) in rows.iter().zip(curve.normalized()) {
        assert!((p - want).abs() <= 1e-8 * want.max(1e-30));
        assert!(tc.is_finite());
    }
    assert!(rows.iter().any(|r| r.1 == 1.0));

    let meta: toml::Value = toml::from_str(&io::curve_metadata_toml(&curve)).unwrap();
    assert_eq!(
        meta["fingerprint"].as_str(),
        Some(curve.fingerprint.as_str())
    );
    assert_eq!(meta["grid"]["n_nu"].as_integer(), Some(1025));
}

#[test]
fn fingerprint_tracks_parameters() {
    let (crystal, pump) = reference_source();
    let model = MoleculeModel::nile_red();
    let a = engine::fingerprint(&model, &crystal, &pump);
    assert_eq!(a, engine::fingerprint(&model, &crystal, &pump));
    assert_ne!(
        a,
        engine::fingerprint(&model.with_scaled_dipole(0, 2.0), &crystal, &pump)
    );
    assert_ne!(
        a,
        engine::fingerprint(&model, &crystal.clone().with_temperature_offset(0.0), &pump)
    );
}

#[test]
fn kernel_matches_direct_quadrature() {
    let (crystal, pump) = reference_source();
    let model = MoleculeModel::nile_red();
    let jsa = build_jsa(&crystal, &pump, Temperature(35.5), &coarse_grid()).unwrap();
    let kernel = OverlapKernel::for_jsa(&model, &jsa);
    let direct = probability(&model, &jsa);
    let via_kernel = kernel.probability(&jsa);
    assert!((direct / via_kernel - 1.0).abs() < 1e-12);
}

#[test]
fn coarse_grid_is_already_converged() {
    let (crystal, pump) = reference_source();
    let model = MoleculeModel::nile_red();
    let t = temps(35.0, 36.0, 3);
    let g = coarse_grid();
    let a = temperature_sweep(&model, &crystal, &pump, t[0], t[2], 3, &g).unwrap();
    let b = temperature_sweep(&model, &crystal, &pump, t[0], t[2], 3, &g.refined()).unwrap();
    let change = max_relative_change(&a, &b).unwrap();
    assert!(change < 5e-3, "change {change}");
}

#[test]
fn spectra_split_above_degeneracy() {
    let (crystal, pump) = reference_source();
    let root = degenerate_pm_temperature(
        &crystal,
        pump.degenerate_omega(),
        Temperature(25.0),
        Temperature(60.0),
    )
    .unwrap();
    assert!((root.0 - source::REFERENCE_DEGENERACY_C).abs() < 1e-4);

    let spectrum = |t: f64| {
        let jsa = build_jsa(&crystal, &pump, Temperature(t), &GridConfig::default()).unwrap();
        single_photon_spectrum(&jsa, SpectrumMode::Coherent)
    };
    let below = spectrum(34.0).lobes(0.5);
    assert_eq!(below.len(), 1);
    assert!((below[0] - 1064.0).abs() < 3.0);
    let above = spectrum(37.5).lobes(0.5);
    assert_eq!(above.len(), 2, "{above:?}");
    assert!(above[1] - above[0] > 30.0);
}

#[test]
fn rate_file_to_cross_section() {
    let text = "# T = 36 °C\nr_solv_cps,r_samp_cps\n10000,9000\n20000,18000\n30000,27000\n";
    let records = io::read_rate_csv(text.as_bytes(), None).unwrap();
    let ds = RateDataset::new(records, 0.5e-3, 2.0)
        .unwrap()
        .with_temperature(36.0);
    let fit = fit_cross_section(&ds, false).unwrap();
    assert!((fit.slope - 0.1).abs() < 1e-12);
    assert!(fit.intercept.abs() < 1e-9);
    let want = 0.1 / (0.5e-6 * 0.2 * fitting::AVOGADRO);
    assert!((fit.sigma_e_cm2 / want - 1.0).abs() < 1e-12);
}

#[test]
fn response_csv_shape() {
    let model = MoleculeModel::nile_red();
    let map = molecule::response_map(&model, (1000.0, 1140.0), (1000.0, 1140.0), 5).unwrap();
    let mut buf = Vec::new();
    io::write_response_csv(&map, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 26);
    assert!(text.starts_with("lambda_i_nm,lambda_s_nm,abs_L\n"));
}
