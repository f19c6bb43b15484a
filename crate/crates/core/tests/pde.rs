use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use soliton_lab::fourier::FourierGrid;
use soliton_lab::pde::*;

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Band-limited interpolant of `field` evaluated at `x`.
fn interpolate(field: &PeriodicField, x: f64) -> f64 {
    let grid = field.grid().unwrap();
    let spec = grid.to_spectrum(&field.values);
    let m = field.len();
    let s: Complex64 = spec
        .iter()
        .zip(grid.wavenumbers())
        .enumerate()
        .map(|(j, (c, &k))| {
            let w = if m % 2 == 0 && j == m / 2 { 0.0 } else { 1.0 };
            c * Complex64::from_polar(w, k * (x - field.x0))
        })
        .sum();
    s.re / m as f64
}

fn soliton_field(a: f64, m: usize, length: f64) -> PeriodicField {
    PeriodicField::sample_real(m, length, -length / 2.0, |x| kdv_standard_soliton(a, x, 0.0, 0.0))
}

#[test]
fn zero_duration_returns_initial() {
    let f = soliton_field(1.0, 256, 40.0);
    let traj = evolve(&f, SplitStepConfig::new(Equation::KdvStandard, 1e-3), 0.0, 1).unwrap();
    assert_eq!(traj.len(), 1);
    assert_eq!(traj[0], f);
}

#[test]
fn soliton_translates_with_its_shape() {
    let (a, length) = (1.0, 40.0);
    let f = soliton_field(a, 512, length);
    let transit = length / (4.0 * a * a);
    let traj = evolve(&f, SplitStepConfig::new(Equation::KdvStandard, 2e-4), transit, usize::MAX).unwrap();
    let end = traj.last().unwrap();
    let exact: Vec<f64> = end.grid_points().iter().map(|&x| kdv_standard_soliton(a, x, 0.0, 0.0)).collect();
    let err = sup_diff(&end.re(), &exact);
    assert!(err <= 1e-5, "shape error after one transit {err:.2e}");
    assert!(end.is_real());
}

#[test]
fn strang_splitting_is_second_order() {
    let f = PeriodicField::sample_real(128, 2.0 * PI, 0.0, |x| 0.5 * x.sin() + 0.2 * (2.0 * x).cos());
    let run = |dt: f64| evolve(&f, SplitStepConfig::new(Equation::KdvStandard, dt), 0.5, usize::MAX).unwrap().pop().unwrap().re();
    let dt = 2e-3;
    let reference = run(dt / 8.0);
    let e1 = sup_diff(&run(dt), &reference);
    let e2 = sup_diff(&run(dt / 2.0), &reference);
    let ratio = e1 / e2;
    assert!((3.5..4.6).contains(&ratio), "error ratio {ratio} ({e1:.2e}, {e2:.2e})");
}

#[test]
fn kdv_invariants_are_conserved() {
    let f = PeriodicField::sample_real(512, 40.0, -20.0, |x| kdv_standard_soliton(1.0, x, 0.0, -6.0) + kdv_standard_soliton(0.7, x, 0.0, 4.0));
    let (m0, p0, h0) = kdv_conserved(&f).unwrap();
    let traj = evolve(&f, SplitStepConfig::new(Equation::KdvStandard, 5e-4), 1.0, 200).unwrap();
    for s in &traj {
        let (m, p, h) = kdv_conserved(s).unwrap();
        assert!((m - m0).abs() / m0.abs() <= 1e-6);
        assert!((p - p0).abs() / p0.abs() <= 1e-6);
        assert!((h - h0).abs() / h0.abs() <= 1e-5);
    }
}

#[test]
fn dealiased_modes_stay_empty() {
    let f = soliton_field(1.0, 512, 40.0);
    let traj = evolve(&f, SplitStepConfig::new(Equation::KdvStandard, 1e-3), 2.0, 500).unwrap();
    let grid = f.grid().unwrap();
    let mask = grid.dealias_mask(2.0 / 3.0);
    let kcut = grid.wavenumbers().iter().zip(&mask).filter(|(_, &w)| w > 0.0).map(|(k, _)| k.abs()).fold(0.0, f64::max);
    for s in &traj[1..] {
        let spec: Vec<f64> = grid.to_spectrum(&s.values).iter().map(|c| c.norm()).collect();
        let peak = spec.iter().cloned().fold(0.0, f64::max);
        let top = spec
            .iter()
            .zip(grid.wavenumbers())
            .filter(|(_, &k)| k.abs() > 0.9 * kcut && k.abs() <= kcut)
            .map(|(v, _)| *v)
            .fold(0.0, f64::max);
        assert!(top <= 1e-10 * peak, "top retained modes at {:.2e} of peak", top / peak);
    }
}

#[test]
fn nls_plane_wave_rotates() {
    let amp = 0.7;
    let f = PeriodicField::sample_complex(64, 2.0 * PI, 0.0, |_| Complex64::from(amp));
    let t = 1.5;
    let end = evolve(&f, SplitStepConfig::new(Equation::Nls, 1e-3), t, usize::MAX).unwrap().pop().unwrap();
    let expected = Complex64::from_polar(amp, amp * amp * t);
    for v in &end.values {
        assert!((v.norm() - amp).abs() < 1e-12);
        assert!((v - expected).norm() < 1e-10);
    }
}

#[test]
fn burgers_matches_characteristics_before_breaking() {
    let u0 = PeriodicField::sample_real(1024, 2.0, 0.0, |x| (PI * x).cos());
    let t = 0.2;
    let end = evolve(&u0, SplitStepConfig::new(Equation::Burgers, 1e-4), t, usize::MAX).unwrap().pop().unwrap();
    let prof = characteristic_profile(&u0, t);
    assert!(!prof.multivalued);
    let err = prof.points.iter().step_by(8).map(|&(x, u)| (interpolate(&end, x) - u).abs()).fold(0.0, f64::max);
    assert!(err < 1e-6, "characteristic mismatch {err:.2e}");
    assert!(characteristic_profile(&u0, 0.0).points.iter().enumerate().all(|(j, p)| p.0 == u0.x(j)));
}

#[test]
fn breaking_time_examples() {
    let flat = PeriodicField::sample_real(64, 2.0, 0.0, |_| 0.3);
    assert_eq!(breaking_time(&flat).unwrap(), None);
    let steep = PeriodicField::sample_real(256, 2.0 * PI, 0.0, |x| (2.0 * x).sin());
    let tb = breaking_time(&steep).unwrap().unwrap();
    assert!((tb - 0.5).abs() < 1e-12);
}

#[test]
fn kdv_gradient_matches_the_flow() {
    let f = PeriodicField::sample_real(256, 40.0, -20.0, |x| kdv_standard_soliton(0.8, x, 0.0, 2.0) + 0.1 * (-(x / 3.0).powi(2)).exp());
    let grid = f.grid().unwrap();
    let u = f.re();
    let ux = grid.derivative_real(&u, 1);
    let uxx = grid.derivative_real(&u, 2);
    let uxxx = grid.derivative_real(&u, 3);
    let g = variational_gradient(&DensitySpec::kdv_hamiltonian(), &f).unwrap().re();
    let expected: Vec<f64> = (0..u.len()).map(|j| -3.0 * u[j] * u[j] - uxx[j]).collect();
    assert!(sup_diff(&g, &expected) < 1e-10);
    let dg = grid.derivative_real(&g, 1);
    let rhs: Vec<f64> = (0..u.len()).map(|j| -6.0 * u[j] * ux[j] - uxxx[j]).collect();
    assert!(sup_diff(&dg, &rhs) < 1e-10);
}

#[test]
fn gradient_of_half_square_is_identity() {
    let f = PeriodicField::sample_real(64, 2.0 * PI, 0.0, |x| x.sin() + 0.3 * (3.0 * x).cos());
    let g = variational_gradient(&DensitySpec::new().term(0.5, &[2]), &f).unwrap();
    assert!(sup_diff(&g.re(), &f.re()) < 1e-13);
}

#[test]
fn directional_derivative_matches_gradient() {
    let spec = DensitySpec::kdv_hamiltonian().term(0.25, &[0, 0, 2]);
    let f = PeriodicField::sample_real(128, 2.0 * PI, 0.0, |x| 0.6 * x.sin() + 0.2 * (2.0 * x).cos());
    let v: Vec<f64> = f.grid_points().iter().map(|&x| (3.0 * x).cos() - 0.5 * x.sin()).collect();
    let g = variational_gradient(&spec, &f).unwrap();
    let exact = inner_product(&g.re(), &v, f.length);
    let eps = 1e-4;
    let shifted = |s: f64| {
        let vals: Vec<f64> = f.re().iter().zip(&v).map(|(u, w)| u + s * w).collect();
        functional_value(&spec, &PeriodicField::from_real(&vals, f.length)).unwrap()
    };
    let fd = (shifted(eps) - shifted(-eps)) / (2.0 * eps);
    assert!((fd - exact).abs() <= 1e-6 * exact.abs(), "fd {fd} vs {exact}");
}

#[test]
fn third_derivative_density_is_rejected() {
    let f = PeriodicField::sample_real(16, 1.0, 0.0, |x| x);
    assert!(functional_value(&DensitySpec::new().term(1.0, &[0, 0, 0, 1]), &f).is_err());
}

#[test]
fn pulse_count_of_constructed_train() {
    for n in 1..=5 {
        let f = PeriodicField::sample_real(1024, 100.0, 0.0, |x| (0..n).map(|i| kdv_standard_soliton(1.0, x, 0.0, 10.0 + 18.0 * i as f64)).sum());
        assert_eq!(count_solitons(&f), n);
    }
}

fn mean_zero_field() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 6).prop_map(|c| {
        let m = 64;
        (0..m)
            .map(|j| {
                let x = 2.0 * PI * j as f64 / m as f64;
                c.iter().enumerate().map(|(k, (a, b))| a * ((k + 1) as f64 * x).cos() + b * ((k + 1) as f64 * x).sin()).sum()
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn symplectic_form_inverts_derivative(u in mean_zero_field(), v in mean_zero_field()) {
        let length = 2.0 * PI;
        let grid = FourierGrid::new(u.len(), length).unwrap();
        let du = grid.derivative_real(&u, 1);
        let lhs = symplectic_form(&du, &v, length).unwrap();
        let rhs = inner_product(&u, &v, length);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
    }

    #[test]
    fn linear_kdv_propagates_plane_waves(k in 1usize..20, steps in 1usize..50) {
        let cfg = SplitStepConfig { delta2: 0.5, nonlinear: false, ..SplitStepConfig::new(Equation::KdvZk, 1e-3) };
        let kk = k as f64;
        let f = PeriodicField::sample_complex(64, 2.0 * PI, 0.0, |x| Complex64::from_polar(1.0, kk * x));
        let mut solver = SplitStepSolver::for_field(&f, cfg).unwrap();
        let mut g = f.clone();
        solver.advance(&mut g, steps).unwrap();
        let phase = Complex64::from_polar(1.0, 0.5 * kk.powi(3) * 1e-3 * steps as f64);
        for (a, b) in g.values.iter().zip(&f.values) {
            prop_assert!((a - b * phase).norm() < 1e-10);
        }
    }

    #[test]
    fn phase_velocity_of_mixed_operator(c in -3.0..3.0f64, d in -3.0..3.0f64, k in 0.1..5.0f64) {
        let v = dispersion_velocity(&[0.0, c, 0.0, d], k).unwrap();
        prop_assert!((v - (c - d * k * k)).abs() < 1e-12 * (1.0 + v.abs()));
    }
}
