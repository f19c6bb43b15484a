use num_complex::Complex64;
use proptest::prelude::*;
use soliton_lab::experiments::{self, CollisionOptions};
use soliton_lab::glm::*;
use soliton_lab::pde::{self, Equation, PeriodicField, SplitStepConfig};
use soliton_lab::scattering::LinePotential;

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn grid(lo: f64, hi: f64, h: f64) -> Vec<f64> {
    let n = ((hi - lo) / h).round() as usize;
    (0..=n).map(|i| lo + h * i as f64).collect()
}

#[test]
fn empty_data_gives_zero() {
    assert!(GlmKernel::default().is_zero());
    let xs = grid(-2.0, 2.0, 0.5);
    let u = glm_potential(&GlmKernel::default(), &xs, &NystromConfig::default()).unwrap();
    assert!(u.iter().all(|&v| v == 0.0));
    let spec = SolitonSpecKdV::new(Vec::new()).unwrap();
    assert!(reflectionless_potential(&spec, &xs).unwrap().iter().all(|&v| v == 0.0));
    let k = glm_solve_contraction(&GlmKernel::default(), &xs, &ContractionConfig::default()).unwrap();
    assert!(k.iter().all(|&v| v == 0.0));
}

#[test]
fn weak_kernel_is_first_neumann_term() {
    let deviation = |eps: f64| {
        let kernel = GlmKernel::new(vec![(eps, 1.0)]);
        let sol = glm_solve_nystrom(&kernel, 0.5, &NystromConfig::default()).unwrap();
        sol.nodes.iter().zip(&sol.values).map(|(&y, &k)| (k + kernel.eval(0.5 + y)).abs()).fold(0.0, f64::max)
    };
    let (d1, d2) = (deviation(1e-3), deviation(1e-4));
    assert!(d1 <= 1e-6);
    let ratio = d1 / d2;
    assert!((ratio / 100.0 - 1.0).abs() < 1e-3, "deviation should scale like eps², ratio {ratio}");
}

#[test]
fn contraction_agrees_with_nystrom() {
    let kernel = GlmKernel { discrete: vec![(0.3, 1.0), (0.2, 1.7)], continuous: vec![(0.5, Complex64::new(0.02, -0.01), 0.5), (1.0, Complex64::new(0.01, 0.0), 0.5)] };
    let xs = grid(0.0, 2.0, 0.25);
    let cfg = ContractionConfig { tol: 1e-13, ..ContractionConfig::default() };
    let fixed = glm_solve_contraction(&kernel, &xs, &cfg).unwrap();
    for (&x, &k) in xs.iter().zip(&fixed) {
        let direct = glm_solve_nystrom(&kernel, x, &cfg.quadrature).unwrap().diagonal;
        assert!((k - direct).abs() <= 1e-8, "x = {x}: {k} vs {direct}");
    }
}

#[test]
fn contraction_refuses_strong_kernel() {
    let kernel = GlmKernel::new(vec![(4.0, 1.0)]);
    assert!(glm_solve_contraction(&kernel, &[0.0], &ContractionConfig::default()).is_err());
}

#[test]
fn one_soliton_diagonal_is_closed_form() {
    let spec = SolitonSpecKdV::centred(&[(1.0, 0.0)]).unwrap();
    for x in [-3.0, -1.0, 0.0, 0.7, 2.5] {
        let k = glm_solve_nystrom(&spec.kernel(), x, &NystromConfig::default()).unwrap().diagonal;
        // K(x,x) = -c² e^{-2κx} / (1 + c² e^{-2κx} / 2κ) with c² = 2κ.
        let e = 2.0 * (-2.0 * x).exp();
        let exact = -e / (1.0 + e / 2.0);
        assert!((k - exact).abs() <= 1e-10, "x = {x}");
    }
}

#[test]
fn separable_reduction_matches_log_det() {
    let spec = SolitonSpecKdV::centred(&[(1.0, -1.0), (1.6, 0.5), (2.3, 1.5)]).unwrap();
    for x in grid(-6.0, 6.0, 0.75) {
        let k = glm_solve_nystrom(&spec.kernel(), x, &NystromConfig::default()).unwrap().diagonal;
        let d = log_det_derivative(&spec, x).unwrap();
        assert!((k - d).abs() <= 1e-10 * (1.0 + d.abs()), "x = {x}: {k} vs {d}");
    }
}

#[test]
fn potential_from_kernel_matches_log_det_formula() {
    let spec = SolitonSpecKdV::centred(&[(1.0, 0.0), (2.0, 0.0)]).unwrap();
    let xs = grid(-4.0, 4.0, 0.005);
    let u = glm_potential(&spec.kernel(), &xs, &NystromConfig::default()).unwrap();
    let exact = reflectionless_potential(&spec, &xs).unwrap();
    let err = sup_diff(&u[2..u.len() - 2], &exact[2..exact.len() - 2]);
    assert!(err <= 1e-8, "interior error {err:.2e}");
}

#[test]
fn two_soliton_formula_matches_log_det() {
    let spec = SolitonSpecKdV::centred(&[(1.0, 0.0), (2.0, 0.0)]).unwrap();
    let xs = grid(-10.0, 10.0, 0.1);
    let u = reflectionless_potential(&spec, &xs).unwrap();
    for (&x, &v) in xs.iter().zip(&u) {
        let w = kdv_two_soliton(2.0, 4.0, x, 0.0).unwrap();
        assert!((v - w).abs() <= 1e-10, "x = {x}");
    }
    assert!(kdv_two_soliton(2.0, 4.0, 200.0, 0.0).unwrap().abs() < 1e-100);
}

/// Location of the minimum of `f` on `[a, b]` by golden-section search.
fn argmin(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    while b - a > 1e-12 {
        let (c, d) = (b - g * (b - a), a + g * (b - a));
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    0.5 * (a + b)
}

#[test]
fn two_soliton_splits_into_shifted_pulses() {
    let (k1, k2): (f64, f64) = (1.0, 2.0);
    let t = 4.0;
    let u = |x: f64, t: f64| kdv_two_soliton(2.0 * k1, 2.0 * k2, x, t).unwrap();
    let centre = |k: f64, t: f64| argmin(|x| u(x, t), 4.0 * k * k * t - 3.0, 4.0 * k * k * t + 3.0);
    let (big_in, big_out) = (centre(k2, -t), centre(k2, t));
    let (small_in, small_out) = (centre(k1, -t), centre(k1, t));
    let log = ((k2 + k1) / (k2 - k1)).ln();
    let big_shift = big_out - big_in - 8.0 * k2 * k2 * t;
    let small_shift = small_out - small_in - 8.0 * k1 * k1 * t;
    assert!((big_shift - log / k2).abs() < 1e-6, "fast pulse shift {big_shift}");
    assert!((small_shift + log / k1).abs() < 1e-6, "slow pulse shift {small_shift}");
    for (tt, cb, cs) in [(-t, big_in, small_in), (t, big_out, small_out)] {
        let xs = grid(-80.0, 80.0, 0.01);
        let err = xs
            .iter()
            .map(|&x| (u(x, tt) - kdv_one_soliton(k2, x, 0.0, cb) - kdv_one_soliton(k1, x, 0.0, cs)).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "t = {tt}: superposition error {err:.2e}");
    }
}

#[test]
fn one_soliton_travels_at_its_speed() {
    let (kappa, t) = (1.5, 0.3);
    let spec = SolitonSpecKdV::centred(&[(kappa, 0.0)]).unwrap();
    let u0 = LinePotential::sample(4001, 20.0, |x| reflectionless_potential(&spec, &[x]).unwrap()[0]).unwrap();
    let xs = grid(-4.0, 6.0, 0.05);
    let trace = ist_solve(&u0, t, &xs, &IstOptions::default()).unwrap();
    let exact: Vec<f64> = xs.iter().map(|&x| kdv_one_soliton(kappa, x, t, 0.0)).collect();
    assert!(sup_diff(&trace.u, &exact) <= 1e-3);
}

#[test]
fn inverse_transform_commutes_with_evolution() {
    let spec = SolitonSpecKdV::centred(&[(1.0, 0.0), (2.0, 0.0)]).unwrap();
    let u0 = LinePotential::sample(4001, 20.0, |x| reflectionless_potential(&spec, &[x]).unwrap()[0]).unwrap();
    let (m, length) = (1024, 51.2);
    let x0 = -0.5 * length;
    let w0 = PeriodicField::sample_real(m, length, x0, |x| -reflectionless_potential(&spec, &[x]).unwrap()[0]);
    for t in [0.1, 0.5] {
        let xs = grid(-6.0, 12.0, 0.05);
        let ist = ist_solve(&u0, t, &xs, &IstOptions::default()).unwrap();
        let expected = reflectionless_potential(&spec.evolve(t), &xs).unwrap();
        assert!(sup_diff(&ist.u, &expected) <= 1e-3, "IST vs evolved data at t = {t}");
        let w = pde::evolve(&w0, SplitStepConfig::new(Equation::KdvStandard, 1e-4), t, usize::MAX).unwrap().pop().unwrap();
        let offset = ((xs[0] - x0) / w.spacing()).round() as usize;
        let numeric: Vec<f64> = (0..xs.len()).map(|i| -w.values[offset + i].re).collect();
        let err = sup_diff(&ist.u, &numeric);
        assert!(err <= 1e-3, "IST vs split-step at t = {t}: {err:.2e}");
    }
}

#[test]
fn collision_is_elastic() {
    let r = experiments::soliton_collision(&CollisionOptions::default()).unwrap();
    assert_eq!(r.incoming.len(), 2);
    assert_eq!(r.outgoing.len(), 2);
    for (a, b) in r.incoming.iter().zip(&r.outgoing) {
        assert!((a - b).abs() <= 1e-4, "height {a} -> {b}");
    }
    for (a, e) in r.incoming.iter().zip(&r.expected) {
        assert!((a - e).abs() <= 1e-3 * e);
    }
}

#[test]
fn spec_rejects_bad_data() {
    assert!(SolitonSpecKdV::new(vec![(1.0, 1.0), (1.0, 2.0)]).is_err());
    assert!(SolitonSpecKdV::new(vec![(-1.0, 1.0)]).is_err());
    assert!(kdv_two_soliton(1.0, 1.0, 0.0, 0.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn separable_solution_for_random_data(k1 in 0.5..1.5f64, gap in 0.3..1.5f64, x1 in -2.0..2.0f64, x2 in -2.0..2.0f64, x in -3.0..3.0f64) {
        let spec = SolitonSpecKdV::centred(&[(k1, x1), (k1 + gap, x2)]).unwrap();
        let k = glm_solve_nystrom(&spec.kernel(), x, &NystromConfig::default()).unwrap().diagonal;
        let d = log_det_derivative(&spec, x).unwrap();
        prop_assert!((k - d).abs() <= 1e-10 * (1.0 + d.abs()));
    }

    #[test]
    fn small_random_kernel_solvers_agree(c1 in 0.01..0.3f64, k1 in 0.5..2.0f64, b in -0.05..0.05f64, x in 0.0..2.0f64) {
        let kernel = GlmKernel { discrete: vec![(c1, k1)], continuous: vec![(0.8, Complex64::new(b, 0.5 * b), 0.5)] };
        let cfg = ContractionConfig { tol: 1e-13, ..ContractionConfig::default() };
        let fixed = glm_solve_contraction(&kernel, &[x], &cfg).unwrap()[0];
        let direct = glm_solve_nystrom(&kernel, x, &cfg.quadrature).unwrap().diagonal;
        prop_assert!((fixed - direct).abs() <= 1e-8);
    }
}
