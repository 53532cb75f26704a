//! Worked examples with reference values computed independently here.

use std::f64::consts::PI;
use std::process::Command;

use nu_collapse::collapse::{
    damped_probability_matrix_with_exponents, damping_exponent, decoherence_onset,
    delta_e_of_baseline, delta_e_pairwise, separation, CollapseParams,
};
use nu_collapse::constants::PhysicalConstants;
use nu_collapse::flavor::{Flavor, MassSpectrum, MixingAngles, MixingMatrix};
use nu_collapse::flux::{detector_flux, pion_chain_source};
use nu_collapse::observability::{matched_dm2, max_observable_energy, observability_length};
use nu_collapse::oracle::{
    damping_by_quadrature, onset_by_bisection, verify_observability, verify_probability,
    verify_probability_with,
};
use nu_collapse::oscillation::{
    band_averaged_probability, momentum, momentum_approx, momentum_deficit, oscillation_length,
    phase_averaged_matrix, probability_matrix, quantum_phase,
};

fn close(value: f64, expected: f64, rel: f64) -> bool {
    ((value - expected) / expected).abs() <= rel
}

#[test]
fn unit_conversions() {
    let c = PhysicalConstants::default();
    let one_ly = c.lightyears_to_natural(1.0).unwrap();
    assert!(close(one_ly, 9.4607e15 / 1.9733e-7, 1e-15));
    assert!(close(one_ly, 4.794e22, 5e-4));
    assert!(close(c.lightyears_to_natural(15e9).unwrap(), 7.19e32, 5e-3));
    assert!(close(
        c.natural_time_to_seconds(1.0).unwrap(),
        6.582e-16,
        5e-4
    ));
    let t_planck = c.natural_time_to_seconds(1.6163e-35 / 1.9733e-7).unwrap();
    assert!(close(t_planck, 5.39e-44, 5e-3));
    assert!(close(c.planck_time_seconds(), 5.39e-44, 5e-3));
}

#[test]
fn tri_bimaximal_entries() {
    let u = MixingMatrix::from_angles(&MixingAngles::tri_bimaximal());
    assert!((u.entry(Flavor::E, 1).norm_sqr() - 1.0 / 3.0).abs() < 1e-15);
    assert!((u.entry(Flavor::Mu, 2).norm_sqr() - 0.5).abs() < 1e-15);
    let mags: Vec<f64> = u
        .flavor_amplitudes(Flavor::E)
        .iter()
        .map(|a| a.norm_sqr())
        .collect();
    for (m, e) in mags.iter().zip([2.0 / 3.0, 1.0 / 3.0, 0.0]) {
        assert!((m - e).abs() < 1e-15);
    }
    let mut raw = *u.raw();
    raw[1][1] += 1e-3;
    assert!(MixingMatrix::from_raw(raw).unitarity_residual() >= 1e-3);
}

#[test]
fn dispersion() {
    // E − p sits below the ulp of E = 1 GeV, so it is computed directly
    let deficit = momentum_deficit(1e9, 2.0).unwrap();
    assert!(close(deficit, 2e-9, 1e-12));
    assert!((momentum(1e9, 2.0).unwrap() - 1e9).abs() <= 1e9 * f64::EPSILON);
    assert_eq!(momentum(1e9, 0.0).unwrap(), 1e9);
    let exact = momentum(10.0, 2.0).unwrap();
    let approx = momentum_approx(10.0, 2.0).unwrap();
    assert!(((exact - approx) / exact).abs() > 1e-4);
}

#[test]
fn oscillation_length_and_phase() {
    let c = PhysicalConstants::default();
    let l_o = oscillation_length(1e9, 2.5e-3).unwrap();
    assert!(close(l_o, 5.03e12, 1e-3));
    assert!(close(c.natural_to_meters(l_o), 9.9e5, 5e-3));
    let half = c.meters_to_natural(4.95e5).unwrap();
    assert!(close(quantum_phase(1e9, 2.5e-3, half).unwrap(), PI, 5e-3));
}

#[test]
fn tri_bimaximal_averages() {
    let u = MixingMatrix::from_angles(&MixingAngles::tri_bimaximal());
    let s = MassSpectrum::default_degenerate();
    assert!((phase_averaged_matrix(&u)[(Flavor::E, Flavor::E)] - 5.0 / 9.0).abs() < 1e-15);
    // brute force: mean over many baselines far beyond both oscillation lengths
    let e = 1e9;
    let l_o = oscillation_length(e, s.dm2(0, 1)).unwrap();
    let n = 20_000;
    let mean: f64 = (0..n)
        .map(|i| {
            let l = 1e3 * l_o * (1.0 + i as f64 / n as f64 * 37.0);
            probability_matrix(&u, &s, e, l).unwrap()[(Flavor::E, Flavor::E)]
        })
        .sum::<f64>()
        / n as f64;
    assert!((mean - 5.0 / 9.0).abs() < 5e-3, "mean {mean}");

    let band =
        band_averaged_probability(&u, &s, e, 0.9, 1e4 * l_o, Flavor::E, Flavor::E, 20_000).unwrap();
    assert!((band - 5.0 / 9.0).abs() < 1e-2, "band {band}");

    let flux = detector_flux(&phase_averaged_matrix(&u), &pion_chain_source()).unwrap();
    for v in flux.as_array() {
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
    }
}

#[test]
fn real_mixing_is_symmetric() {
    let u = MixingMatrix::from_angles(&MixingAngles::default_global_fit());
    let p = probability_matrix(&u, &MassSpectrum::default_degenerate(), 1e9, 7.3e12).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            assert!((p.0[i][j] - p.0[j][i]).abs() < 1e-12);
        }
    }
}

#[test]
fn separation_and_asymptote() {
    let c = PhysicalConstants::default();
    let d = separation(1e9, 2.5e-3, 5.03e12).unwrap();
    assert!(close(d, 6.3e-9, 5e-3));
    assert!(close(c.natural_to_meters(d), 1.2e-15, 5e-2));

    let p = CollapseParams::new(1.0).unwrap();
    let a = 3.0 * 4.0 / (5.0 * 1.1664e-23);
    assert!(close(a, 2.06e23, 5e-3));
    let asymptote = 8.0 * PI * a / (1.2209e28f64 * 1.2209e28);
    assert!(close(asymptote, 3.5e-32, 2e-2));
    let far = delta_e_of_baseline(2.0, 2.0, 1e18, 2.5e-3, 1e60, &p).unwrap();
    assert!(close(far, asymptote, 1e-9));
    let pairwise = delta_e_pairwise(
        2.0,
        2.0,
        1.1664e-23 * 2.0,
        1.1664e-23 * 2.0,
        f64::INFINITY,
        &p,
    )
    .unwrap();
    assert!(close(pairwise, asymptote, 1e-12));
}

#[test]
fn onset_bisection_at_reference_point() {
    let p = CollapseParams::new(1.0).unwrap();
    let closed = decoherence_onset(2.0, 2.0, 1e22, 1e-5, &p)
        .unwrap()
        .unwrap();
    let expected = 10.0 * 1.1664e-23 * 4.0 * 1e44 / (3.0 * 4.0 * 1e-5);
    assert!(close(closed, expected, 1e-12));
    assert!(close(
        onset_by_bisection(2.0, 2.0, 1e22, 1e-5, &p).unwrap(),
        closed,
        1e-9
    ));
}

#[test]
fn exponent_at_twice_onset() {
    let p = CollapseParams::new(1.0).unwrap();
    let (m, e, dm2) = (2.0, 1e22, 1e-5);
    let d = decoherence_onset(m, m, e, dm2, &p).unwrap().unwrap();
    let a = 3.0 * 2.0 * m / (5.0 * 1.1664e-23);
    let b = 2.0 * m * m * e * e / dm2;
    let expected = 8.0 * PI / (1.2209e28f64 * 1.2209e28) * (a * d - b * 2f64.ln());
    let primary = damping_exponent(m, m, e, dm2, 2.0 * d, &p).unwrap();
    assert!(close(primary, expected, 1e-9));
    assert!(close(
        damping_by_quadrature(m, m, e, dm2, 2.0 * d, &p).unwrap(),
        expected,
        1e-9
    ));
}

#[test]
fn large_exponents_give_phase_average() {
    let u = MixingMatrix::from_angles(&MixingAngles::new(0.59, 0.15, 0.86, 4.1).unwrap());
    let s = MassSpectrum::default_degenerate();
    let p = damped_probability_matrix_with_exponents(&u, &s, 1e9, 3.3e12, [50.0; 3]).unwrap();
    assert!(p.max_abs_diff(&phase_averaged_matrix(&u)) < 1e-15);
}

#[test]
fn matched_dm2_reference() {
    let c = PhysicalConstants::default();
    let l = c.lightyears_to_natural(1e10).unwrap();
    assert!(close(matched_dm2(1e22, l).unwrap(), 2.6e-10, 1e-2));
}

#[test]
fn observability_reference_points() {
    let p = CollapseParams::new(1.0).unwrap();
    assert!(verify_observability(2.0, 2.0, 1e22, &p).unwrap().passed);
    let c = p.constants;
    let e_star = max_observable_energy(2.0, 2.0, &c).unwrap();
    assert!(
        observability_length(2.0, 2.0, 0.999 * e_star, &p).unwrap()
            > observability_length(2.0, 2.0, 0.5 * e_star, &p).unwrap()
    );
    // E* tracks 1/(m_j m_k) at fixed m_j + m_k up to the logarithm
    let shifted = max_observable_energy(1.0, 3.0, &c).unwrap();
    let ratio = shifted / e_star;
    assert!(
        ratio > 4.0 / 3.0 * 0.9 && ratio < 4.0 / 3.0 * 1.1,
        "ratio {ratio}"
    );
}

#[test]
fn corrupted_phase_sign_is_caught() {
    let u = MixingMatrix::from_angles(&MixingAngles::new(0.59, 0.15, 0.86, 4.1).unwrap());
    let s = MassSpectrum::default_degenerate();
    let (e, l) = (2e9, 7.7e12);
    assert!(verify_probability(&u, &s, e, l).unwrap().passed);
    // e^{+iΦ} in place of e^{−iΦ} is the same as evolving with U*
    let flipped =
        |u: &MixingMatrix, s: &MassSpectrum, e: f64, l: f64| probability_matrix(&u.conj(), s, e, l);
    let r = verify_probability_with(&flipped, &u, &s, e, l).unwrap();
    assert!(!r.passed, "{r}");
}

fn cli_value(args: &[&str], key: &str) -> f64 {
    let out = Command::new(env!("CARGO_BIN_EXE_nu-collapse"))
        .args(args)
        .env_remove("NU_COLLAPSE_CONFIG")
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key},")))
        .unwrap_or_else(|| panic!("missing {key}"))
        .parse()
        .unwrap()
}

#[test]
fn cli_gammas_match_library() {
    let args = [
        "probability",
        "--E",
        "1e22",
        "--L-ly",
        "1e10",
        "--xi",
        "1e-2",
        "--m",
        "2,2.000001,2.000002",
    ];
    let p = CollapseParams::new(1e-2).unwrap();
    let l = p.constants.lightyears_to_natural(1e10).unwrap();
    let s = MassSpectrum::new(2.0, 2.000001, 2.000002).unwrap();
    for (j, k, key) in [(0, 1, "gamma_12"), (0, 2, "gamma_13"), (1, 2, "gamma_23")] {
        let lib = damping_exponent(s.mass(j), s.mass(k), 1e22, s.dm2(j, k), l, &p).unwrap();
        assert_eq!(cli_value(&args, key), lib, "{key}");
    }
}

#[test]
fn cli_off_switches() {
    let off = ["probability", "--E", "1e22", "--L-ly", "1e10", "--xi", "0"];
    for pair in ["ee", "emu", "mutau", "tautau"] {
        assert_eq!(
            cli_value(&off, &format!("P_{pair}_u")),
            cli_value(&off, &format!("P_{pair}_d"))
        );
    }
    let still = ["flux", "--xi", "0", "--L-ly", "0"];
    assert!((cli_value(&still, "detector_u_e") - 1.0 / 3.0).abs() < 1e-15);
    assert!((cli_value(&still, "detector_d_mu") - 2.0 / 3.0).abs() < 1e-15);
    assert_eq!(cli_value(&still, "deviation"), 0.0);
    let tbm = ["flux", "--mixing", "tri-bimaximal", "--xi", "10"];
    for f in ["e", "mu", "tau"] {
        assert!((cli_value(&tbm, &format!("detector_d_{f}")) - 1.0 / 3.0).abs() < 1e-10);
    }
}

#[test]
fn one_cell_scan_matches_probability() {
    let bin = env!("CARGO_BIN_EXE_nu-collapse");
    let scan = Command::new(bin)
        .args(["scan", "--E-grid", "3e21", "--L-grid-ly", "2e9"])
        .env_remove("NU_COLLAPSE_CONFIG")
        .output()
        .unwrap();
    let text = String::from_utf8(scan.stdout).unwrap();
    let mut data = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = data.next().unwrap().split(',').collect();
    let row: Vec<f64> = data
        .next()
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    let single = ["probability", "--E", "3e21", "--L-ly", "2e9"];
    for key in ["P_ee_u", "P_mutau_d", "gamma_13"] {
        let idx = header.iter().position(|h| *h == key).unwrap();
        assert_eq!(row[idx], cli_value(&single, key), "{key}");
    }
    let flux_dev = cli_value(&["flux", "--E", "3e21", "--L-ly", "2e9"], "deviation");
    assert_eq!(row[25], flux_dev);

    let faint = Command::new(bin)
        .args(["scan", "--xi", "1e-12"])
        .env_remove("NU_COLLAPSE_CONFIG")
        .output()
        .unwrap();
    let text = String::from_utf8(faint.stdout).unwrap();
    for line in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let dev: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(dev < 1e-9, "{dev}");
    }
}
