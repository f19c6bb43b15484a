use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use proptest::prelude::*;
use soliton_lab::pde::PeriodicField;
use soliton_lab::zs_akns::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn smooth_potential(m: usize, x: f64) -> SU2Potential {
    SU2Potential::sample(m, x, |x| c(0.8, 0.2) * (-x * x / 2.0).exp() + c(-0.1, 0.3) * x * (-(x - 1.0).powi(2)).exp()).unwrap()
}

fn bump(amp: Complex64, w: f64) -> impl Fn(f64) -> Complex64 {
    move |x| {
        let y = x / w;
        if y.abs() < 1.0 {
            amp * (1.0 - 1.0 / (1.0 - y * y)).exp()
        } else {
            Complex64::from(0.0)
        }
    }
}

#[test]
fn hierarchy_matrices_are_skew_adjoint_and_trace_free() {
    let seq = recursion_q(&smooth_potential(256, 12.0), 5).unwrap();
    seq.check_decay(1e-8).unwrap();
    for k in 0..=5 {
        assert!(seq.max_skew_adjoint_defect(k) <= 1e-10, "Q_{k}");
        assert!(seq.q[k].iter().all(|m| m.trace().norm() <= 1e-10), "tr Q_{k}");
    }
}

#[test]
fn recursion_satisfies_the_quadratic_identity() {
    let seq = recursion_q(&smooth_potential(256, 12.0), 4).unwrap();
    let a = a_matrix();
    for k in 2..=4 {
        for j in 0..seq.q[0].len() {
            let lhs = a * seq.q[k][j] + seq.q[k][j] * a;
            let rhs: Mat2 = (1..k).map(|i| -(seq.q[i][j] * seq.q[k - i][j])).sum();
            assert!((lhs - rhs).norm() <= 1e-8, "k = {k}, j = {j}");
        }
    }
}

#[test]
fn first_flows_are_translation_and_nls() {
    let pot = smooth_potential(256, 12.0);
    let q = pot.q();
    let qx = pot.grid().derivative(q, 1);
    let qxx = pot.grid().derivative(q, 2);
    let f1 = nls_flow_rhs(&pot, 1).unwrap();
    let f2 = nls_flow_rhs(&pot, 2).unwrap();
    for j in 0..q.len() {
        assert!((f1[j] - qx[j]).norm() <= 1e-9);
        let nls = c(0.0, 0.5) * (qxx[j] + 2.0 * q[j].norm_sqr() * q[j]);
        assert!((f2[j] - nls).norm() <= 1e-9);
    }
}

#[test]
fn gradient_matches_finite_differences() {
    let pot = smooth_potential(256, 12.0);
    let v: Vec<Complex64> = pot.grid_points().iter().map(|&x| c(0.3, -0.5) * (-(x + 0.5).powi(2)).exp() * (1.0 + x)).collect();
    let shifted = |s: f64| {
        let q: Vec<Complex64> = pot.q().iter().zip(&v).map(|(a, b)| a + b * s).collect();
        SU2Potential::new(q, pot.half_width()).unwrap()
    };
    let eps = 1e-4;
    for k in 0..3 {
        let fd = (hamiltonian_h(&shifted(eps), k).unwrap() - hamiltonian_h(&shifted(-eps), k).unwrap()) / (2.0 * eps);
        let grad = recursion_q(&pot, k + 1).unwrap().gradient_entry(k).unwrap();
        let g: Vec<Complex64> = grad.iter().map(|x| -2.0 * x).collect();
        let exact = su2_inner_product(pot.grid(), &g, &v);
        assert!((fd - exact).abs() <= 1e-6 * (1.0 + exact.abs()), "H_{k}: fd {fd} vs {exact}");
    }
}

#[test]
fn hamiltonians_commute() {
    let seq = recursion_q(&smooth_potential(256, 12.0), 5).unwrap();
    for k in 0..3 {
        for l in 0..3 {
            let b = seq.bracket(k, l).unwrap();
            assert!(b.abs() <= 1e-8 * seq.bracket_scale(k, l).unwrap(), "{{H_{k}, H_{l}}} = {b:e}");
        }
    }
}

#[test]
fn zero_potential_has_trivial_data() {
    let pot = SU2Potential::new(vec![Complex64::from(0.0); 128], 6.0).unwrap();
    for k in 0..3 {
        assert_eq!(hamiltonian_h(&pot, k).unwrap(), 0.0);
    }
    let cs = compact_support_scattering(&pot, c(0.4, 1.2)).unwrap();
    assert!(cs.m.iter().all(|m| (m - Mat2::identity()).norm() <= 1e-14));
    assert_eq!(count_zeros_s11(&pot, [-2.0, 2.0, 0.1, 2.0], 64).unwrap(), 0);
}

#[test]
fn eigenfunction_expansion_reproduces_the_recursion() {
    let pot = SU2Potential::sample(65536, 3.0, bump(c(0.8, 0.3), 2.5)).unwrap();
    let seq = recursion_q(&pot, 2).unwrap();
    let a = a_matrix();
    let dir = Complex64::from_polar(1.0, PI / 4.0);
    let lambdas: Vec<Complex64> = [20.0, 40.0, 80.0, 160.0, 320.0, 640.0].iter().map(|&r| dir * r).collect();
    let values: Vec<Vec<Mat2>> = lambdas
        .iter()
        .map(|&l| {
            let cs = compact_support_scattering(&pot, l).unwrap();
            cs.m[..pot.len()].iter().map(|m| (m * a * m.try_inverse().unwrap() - a) * l).collect()
        })
        .collect();
    let coeffs = fit_inverse_powers(&lambdas, &values).unwrap();
    for j in 1..=2 {
        let scale = seq.q[j].iter().map(|m| m.norm()).fold(0.0, f64::max);
        let err = coeffs[j - 1].iter().zip(&seq.q[j]).map(|(f, q)| (f - q).norm()).fold(0.0, f64::max);
        assert!(err <= 1e-3 * scale, "Q_{j}: relative error {:.2e}", err / scale);
    }
}

#[test]
fn strong_bump_has_a_bound_state() {
    let pot = SU2Potential::sample(1024, 3.0, bump(c(3.0, 0.0), 2.5)).unwrap();
    let rect = [-2.0, 2.0, 0.05, 4.0];
    let zeros = locate_zeros_s11(&pot, rect, 24).unwrap();
    assert!(!zeros.is_empty());
    assert_eq!(zeros.len(), count_zeros_s11(&pot, rect, 256).unwrap());
    for z in &zeros {
        assert!(s11(&pot, *z).unwrap().norm() <= 1e-8);
        assert!(matches!(compact_support_scattering(&pot, *z), Err(soliton_lab::Error::Pole(_))));
    }
}

#[test]
fn zero_curvature_holds_on_the_vacuum_and_the_soliton() {
    let lambdas = [c(0.5, 0.5), c(-1.0, 0.2), c(2.0, 0.0)];
    let zero = ZccTrajectory::sample(-5.0, 0.1, 101, 0.0, 1e-3, 9, |_, _| Complex64::from(0.0));
    for spec in [LaxPairSpec::KdvAkns, LaxPairSpec::NlsZs, LaxPairSpec::SgeAkns] {
        assert!(zcc_residual(spec, &zero, &lambdas).unwrap() <= 1e-12);
    }
    let (z, b) = (c(0.3, 0.8), c(0.4, 0.2));
    let sol = ZccTrajectory::sample(-5.0, 0.02, 501, 0.0, 1e-3, 9, |x, t| dressing_one_soliton(z, b, x, t, 2).unwrap());
    assert!(zcc_residual(LaxPairSpec::NlsZs, &sol, &lambdas).unwrap() <= 1e-6);
    // Perturbing off the solution makes the residual grow linearly.
    let bent = |eps: f64| {
        let t = ZccTrajectory::sample(-5.0, 0.02, 501, 0.0, 1e-3, 9, |x, t| {
            dressing_one_soliton(z, b, x, t, 2).unwrap() + eps * (-x * x).exp()
        });
        zcc_residual(LaxPairSpec::NlsZs, &t, &lambdas).unwrap()
    };
    let ratio = bent(2e-3) / bent(1e-3);
    assert!((ratio - 2.0).abs() < 0.05, "residual ratio {ratio}");
}

#[test]
fn dressing_special_cases() {
    for x in [-2.0, 0.0, 3.0] {
        assert_eq!(dressing_one_soliton(c(0.2, 1.0), Complex64::from(0.0), x, 0.5, 2).unwrap(), Complex64::from(0.0));
    }
    let peak = dressing_one_soliton(c(0.0, 1.0), Complex64::from(FRAC_1_SQRT_2), 0.0, 0.0, 2).unwrap();
    assert!((peak.norm() - 2.0).abs() < 1e-14);
    assert!(dressing_one_soliton(c(0.0, 1.0), Complex64::from(1.0), 0.0, 0.0, 2).is_err());
    assert!(dressing_one_soliton(c(0.0, -1.0), Complex64::from(0.5), 0.0, 0.0, 2).is_err());
    assert_eq!(dress_vacuum(&[], 1.0, 1.0, 2).unwrap(), Complex64::from(0.0));
}

#[test]
fn dressing_closed_form_and_multi_pole_orders() {
    let (z, b) = (c(-0.4, 0.6), c(0.1, -0.5));
    for (x, t) in [(-3.0, 0.0), (0.4, 1.0), (2.0, -0.7)] {
        let q = dressing_one_soliton(z, b, x, t, 2).unwrap();
        assert!((q - nls_soliton(z, b, x, t)).norm() <= 1e-12);
    }
    let poles = [(c(0.3, 0.7), Vec2::new(c(1.0, 0.0), c(0.2, 0.5))), (c(-0.5, 1.1), Vec2::new(c(0.3, -0.1), c(1.0, 0.0)))];
    let swapped = [poles[1], poles[0]];
    for (x, t) in [(-1.0, 0.0), (0.5, 0.3), (2.0, 1.0)] {
        let q = dress_vacuum(&poles, x, t, 2).unwrap();
        assert!((q - dress_sequential(&poles, x, t, 2).unwrap()).norm() <= 1e-10);
        assert!((q - dress_sequential(&swapped, x, t, 2).unwrap()).norm() <= 1e-10);
    }
}

#[test]
fn split_step_follows_the_dressed_soliton() {
    let (z, b) = (c(0.3, 0.8), c(0.4, 0.2));
    let (m, length, t) = (1024, 40.0, 1.0);
    let q0 = PeriodicField::sample_complex(m, length, -20.0, |x| dressing_one_soliton(z, b, x, 0.0, 2).unwrap());
    let traj = nls_integrate(&q0, t, 1e-3, 100).unwrap();
    let mass = |f: &PeriodicField| f.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * f.spacing();
    let m0 = mass(&q0);
    for s in &traj {
        assert!((mass(s) - m0).abs() <= 1e-8 * m0);
    }
    let end = traj.last().unwrap();
    let err = end
        .grid_points()
        .iter()
        .zip(&end.values)
        .map(|(&x, v)| (v - dressing_one_soliton(z, b, x, t, 2).unwrap()).norm())
        .fold(0.0, f64::max);
    assert!(err <= 1e-4, "split-step vs dressing {err:.2e}");
}

#[test]
fn loop_element_basics() {
    assert_eq!(rational_loop_product(&[], c(0.3, 0.4)).unwrap(), Mat2::identity());
    let g = RationalLoopElement::new(vec![(c(0.3, 0.7), Vec2::new(c(1.0, 0.0), c(0.2, 0.5)))]).unwrap();
    assert!(matches!(g.eval(c(0.3, 0.7)), Err(soliton_lab::Error::Pole(_))));
    assert!(RationalLoopElement::new(vec![(c(1.0, 0.0), Vec2::new(c(1.0, 0.0), c(0.0, 0.0)))]).is_err());
    assert!(RationalLoopElement::new(vec![(c(1.0, 1.0), Vec2::zeros())]).is_err());
    let far = g.eval(c(1e8, 1e8)).unwrap();
    assert!((far - Mat2::identity()).norm() < 1e-7);
}

fn pole() -> impl Strategy<Value = (Complex64, Vec2)> {
    (-2.0..2.0f64, 0.2..2.0f64, any::<bool>(), -1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, 0.1..1.0f64).prop_map(
        |(re, im, upper, a, b, cc, d)| {
            let z = c(re, if upper { im } else { -im });
            (z, Vec2::new(c(d, a), c(b, cc)))
        },
    )
}

fn spectral_point() -> impl Strategy<Value = Complex64> {
    (-3.0..3.0f64, 0.05..3.0f64, any::<bool>()).prop_map(|(re, im, upper)| c(re, if upper { im } else { -im }))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn loop_elements_satisfy_the_reality_condition(poles in prop::collection::vec(pole(), 1..4), l in spectral_point()) {
        let g = RationalLoopElement::new(poles).unwrap();
        prop_assume!(g.poles.iter().all(|(z, _)| (z - l).norm() > 0.05 && (z.conj() - l).norm() > 0.05));
        prop_assert!(g.reality_defect(l).unwrap() <= 1e-12);
    }

    #[test]
    fn products_of_elements_stay_real(p in pole(), q in pole(), l in spectral_point()) {
        let e = [RationalLoopElement::new(vec![p]).unwrap(), RationalLoopElement::new(vec![q]).unwrap()];
        let poles: Vec<Complex64> = e.iter().flat_map(|g| g.poles.iter().map(|(z, _)| *z)).collect();
        prop_assume!(poles.iter().all(|z| (z - l).norm() > 0.05 && (z.conj() - l).norm() > 0.05));
        let g = rational_loop_product(&e, l).unwrap();
        let h = rational_loop_product(&e, l.conj()).unwrap();
        prop_assert!((h.adjoint() * g - Mat2::identity()).norm() <= 1e-12);
    }

    #[test]
    fn permuted_pair_is_the_same_element(p in pole(), q in pole(), l in spectral_point()) {
        prop_assume!((p.0 - q.0).norm() > 0.2 && (p.0 - q.0.conj()).norm() > 0.2);
        let g = RationalLoopElement::new(vec![p, q]).unwrap();
        let h = g.permuted_pair().unwrap();
        prop_assert_eq!(h.poles[0].0, g.poles[1].0);
        prop_assume!(g.poles.iter().all(|(z, _)| (z - l).norm() > 0.05 && (z.conj() - l).norm() > 0.05));
        let (a, b) = (g.eval(l).unwrap(), h.eval(l).unwrap());
        prop_assert!((a - b).norm() <= 1e-8 * (1.0 + a.norm()));
    }
}
