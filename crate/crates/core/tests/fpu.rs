use std::f64::consts::PI;

use proptest::prelude::*;
use soliton_lab::fpu::*;

fn interior_state(cfg: &LatticeConfig, x: &[f64], v: &[f64]) -> LatticeState {
    let mut s = LatticeState::at_rest(cfg);
    let n = cfg.n;
    s.x[1..n - 1].copy_from_slice(&x[..n - 2]);
    s.v[1..n - 1].copy_from_slice(&v[..n - 2]);
    s
}

fn small_vec(n: usize, scale: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-scale..scale, n)
}

#[test]
fn equilibrium_has_no_force() {
    let cfg = LatticeConfig::default();
    let a = fpu_acceleration(&vec![0.0; cfg.n], &cfg).unwrap();
    assert!(a.iter().all(|&v| v == 0.0));
}

#[test]
fn linear_mode_is_an_eigenvector() {
    let cfg = LatticeConfig::new(16, 0.0, 1.3, 0.7).unwrap();
    let n1 = (cfg.n - 1) as f64;
    let x: Vec<f64> = (0..cfg.n).map(|j| (j as f64 * PI / n1).sin()).collect();
    let a = fpu_acceleration(&x, &cfg).unwrap();
    let lam = -(cfg.c / cfg.h).powi(2) * 2.0 * (1.0 - (PI / n1).cos());
    for j in 1..cfg.n - 1 {
        assert!((a[j] - lam * x[j]).abs() < 1e-13, "site {j}");
    }
}

#[test]
fn pure_mode_has_single_coefficient() {
    let cfg = LatticeConfig::default();
    let s = LatticeState::from_mode(&cfg, 1, 1.0).unwrap();
    let c = mode_coefficients(&s, &cfg).unwrap();
    assert!(c[0].0.abs() > 1.0);
    assert!(c[1..].iter().all(|&(a, b)| a.abs() < 1e-13 && b == 0.0));
    let zero = mode_coefficients(&LatticeState::at_rest(&cfg), &cfg).unwrap();
    assert!(zero.iter().all(|&(a, b)| a == 0.0 && b == 0.0));
}

#[test]
fn harmonic_mode_returns_after_one_period() {
    let cfg = LatticeConfig::new(32, 0.0, 1.0, 1.0).unwrap();
    let period = 2.0 * PI / cfg.omega(3);
    let s0 = LatticeState::from_mode(&cfg, 3, 0.5).unwrap();
    let mut errs = Vec::new();
    for steps in [400usize, 800] {
        let dt = period / steps as f64;
        let mut s = s0.clone();
        advance(&mut s, dt, steps, &cfg).unwrap();
        let w = cfg.omega(3);
        let dist = |s: &LatticeState| -> f64 {
            s.x.iter().zip(&s0.x).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
                + s.v.iter().zip(&s0.v).map(|(a, b)| ((a - b) / w).powi(2)).sum::<f64>()
        };
        let num = dist(&s).sqrt();
        let den: f64 = s0.x.iter().map(|a| a * a).sum::<f64>().sqrt();
        errs.push(num / den);
    }
    assert!(errs[0] < 1e-3, "{errs:?}");
    let order = (errs[0] / errs[1]).log2();
    assert!((order - 2.0).abs() < 0.2, "observed order {order}");
}

#[test]
fn harmonic_mode_energies_are_constant() {
    let cfg = LatticeConfig::new(16, 0.0, 1.0, 1.0).unwrap();
    let s0 = LatticeState::from_mode(&cfg, 1, 1.0).unwrap();
    // Verlet's mode energy oscillates with relative amplitude (w dt)^2 / 4.
    for (frac, tol) in [(1e-3, (2e-3 * PI).powi(2) / 4.0 * 1.01), (3e-4, 1e-6)] {
        let dt = frac * cfg.linear_period();
        let run = simulate(&s0, &cfg, dt, 3.0 * cfg.linear_period(), 50).unwrap();
        let h0 = run.spectra[0].mode(1);
        for s in &run.spectra {
            assert!((s.mode(1) - h0).abs() / h0 < tol, "dt = {frac} T");
            assert!(s.energy[1..].iter().all(|&e| e < 1e-20));
        }
    }
    let dt = 1e-3 * cfg.linear_period();
    let run = simulate(&s0, &cfg, dt, 3.0 * cfg.linear_period(), 50).unwrap();
    let opts = RecurrenceOptions { guard: 0.5 * cfg.linear_period(), tol: 1e-4, require_departure: false };
    let rec = detect_recurrence(&run.spectra, &opts).unwrap();
    assert!(rec.deviation < 1e-4);
}

#[test]
fn harmonic_energy_drift_is_bounded() {
    let cfg = LatticeConfig::new(16, 0.0, 1.0, 1.0).unwrap();
    let wmax = cfg.omega(cfg.mode_count());
    let x: Vec<f64> = (0..14).map(|j| 0.1 * ((j * 7 % 5) as f64 - 2.0)).collect();
    let s0 = interior_state(&cfg, &x, &[0.0; 14]);
    let e0 = total_energy(&s0, &cfg).unwrap();
    let mut drift = Vec::new();
    for dt in [0.2 / wmax, 0.1 / wmax] {
        let run = simulate(&s0, &cfg, dt, 1e5 * 0.2 / wmax, 1000).unwrap();
        let worst = run.total_energy.iter().map(|e| (e - e0).abs() / e0).fold(0.0, f64::max);
        let late = run.total_energy[run.total_energy.len() / 2..].iter().map(|e| (e - e0).abs() / e0).fold(0.0, f64::max);
        let early = run.total_energy[..run.total_energy.len() / 2].iter().map(|e| (e - e0).abs() / e0).fold(0.0, f64::max);
        assert!(late < 2.0 * early + 1e-14, "secular growth: early {early:.2e} late {late:.2e}");
        drift.push(worst);
    }
    let ratio = drift[0] / drift[1];
    assert!(ratio > 3.0 && ratio < 5.0, "energy error should scale like dt^2, ratio {ratio}");
}

#[test]
fn nonlinear_lattice_short_run_recurs() {
    let cfg = LatticeConfig::default();
    let run = simulate(&LatticeState::from_mode(&cfg, 1, 1.0).unwrap(), &cfg, 0.1, 200.0 * cfg.linear_period(), 20).unwrap();
    let opts = RecurrenceOptions { tol: 0.05, require_departure: true, ..RecurrenceOptions::for_config(&cfg) };
    let rec = detect_recurrence(&run.spectra, &opts).expect("mode-1 energy returns");
    assert!(rec.deviation <= 0.05);
}

#[test]
fn rejects_bad_input() {
    assert!(LatticeConfig::new(2, 0.0, 1.0, 1.0).is_err());
    assert!(LatticeConfig::new(8, 0.0, 0.0, 1.0).is_err());
    let cfg = LatticeConfig::default();
    assert!(LatticeState::from_mode(&cfg, 0, 1.0).is_err());
    assert!(LatticeState::from_mode(&cfg, cfg.mode_count() + 1, 1.0).is_err());
    let mut s = LatticeState::at_rest(&cfg);
    assert!(advance(&mut s, -0.1, 1, &cfg).is_err());
}

#[test]
fn blow_up_is_reported() {
    let cfg = LatticeConfig::new(8, 5.0, 1.0, 1.0).unwrap();
    let mut s = LatticeState::from_mode(&cfg, 1, 5.0).unwrap();
    let err = advance(&mut s, 0.1, 100_000, &cfg).unwrap_err();
    assert!(matches!(err, soliton_lab::Error::NumericOverflow { .. }), "{err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn endpoints_stay_pinned(x in small_vec(14, 0.3), v in small_vec(14, 0.3), alpha in 0.0..0.5f64) {
        let cfg = LatticeConfig::new(16, alpha, 1.0, 1.0).unwrap();
        let mut s = interior_state(&cfg, &x, &v);
        advance(&mut s, 0.05, 200, &cfg).unwrap();
        prop_assert_eq!(s.x[0], 0.0);
        prop_assert_eq!(s.x[15], 0.0);
        prop_assert_eq!(s.v[0], 0.0);
        prop_assert_eq!(s.v[15], 0.0);
    }

    #[test]
    fn sine_transform_round_trip(x in small_vec(30, 1.0), v in small_vec(30, 1.0)) {
        let cfg = LatticeConfig::default();
        let s = interior_state(&cfg, &x, &v);
        let back = state_from_modes(&mode_coefficients(&s, &cfg).unwrap(), 0.0, &cfg).unwrap();
        for j in 0..cfg.n {
            prop_assert!((back.x[j] - s.x[j]).abs() < 1e-12);
            prop_assert!((back.v[j] - s.v[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn harmonic_energy_is_sum_of_modes(x in small_vec(30, 1.0), v in small_vec(30, 1.0)) {
        let cfg = LatticeConfig::new(32, 0.0, 1.0, 1.0).unwrap();
        let s = interior_state(&cfg, &x, &v);
        let spec = mode_energies(&s, &cfg).unwrap();
        prop_assert!(spec.energy.iter().all(|&e| e >= 0.0));
        let sum: f64 = spec.energy.iter().sum();
        let total = total_energy(&s, &cfg).unwrap();
        prop_assert!((sum - total).abs() <= 1e-10 * total.max(1.0));
    }

    #[test]
    fn velocity_verlet_is_reversible(x in small_vec(14, 0.2), v in small_vec(14, 0.2)) {
        let cfg = LatticeConfig::new(16, 0.25, 1.0, 1.0).unwrap();
        let s0 = interior_state(&cfg, &x, &v);
        let mut s = s0.clone();
        advance(&mut s, 0.05, 500, &cfg).unwrap();
        s.v.iter_mut().for_each(|v| *v = -*v);
        advance(&mut s, 0.05, 500, &cfg).unwrap();
        for j in 0..cfg.n {
            prop_assert!((s.x[j] - s0.x[j]).abs() < 1e-9);
            prop_assert!((s.v[j] + s0.v[j]).abs() < 1e-9);
        }
    }

    #[test]
    fn time_average_of_constant(c in -10.0..10.0f64, n in 2usize..200, dt in 1e-3..1.0f64) {
        prop_assert!((time_average(&vec![c; n], dt).unwrap() - c).abs() < 1e-12);
    }
}

#[test]
fn sine_over_whole_periods_averages_to_zero() {
    let n = 1000;
    let dt = 2.0 * PI * 3.0 / n as f64;
    let samples: Vec<f64> = (0..=n).map(|i| (i as f64 * dt).sin()).collect();
    assert!(time_average(&samples, dt).unwrap().abs() < 1e-12);
}
