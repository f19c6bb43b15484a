//! End-to-end experiment drivers shared by the command-line tool and the acceptance suite.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fpu::{self, LatticeConfig, LatticeState, ModeSpectrum, Recurrence, RecurrenceOptions};
use crate::glm::{self, IstOptions, SolitonSpecKdV};
use crate::pde::{self, Equation, PeriodicField, SplitStepConfig};
use crate::scattering::{self, LinePotential};
use crate::zs_akns::{self, SU2Potential};

pub const EXPERIMENTS: [&str; 6] = ["fpu", "zk", "ist-roundtrip", "soliton-collision", "hierarchy", "dressing"];

#[derive(Debug, Clone, PartialEq)]
pub struct FpuOptions {
    pub n: usize,
    pub alpha: f64,
    pub mode: usize,
    pub amplitude: f64,
    pub dt: f64,
    /// Run length in linear periods of mode 1.
    pub periods: f64,
    pub sample_every: usize,
    pub recurrence_tol: f64,
}

impl Default for FpuOptions {
    fn default() -> Self {
        Self { n: 32, alpha: 0.25, mode: 1, amplitude: 1.0, dt: 0.1, periods: 1e5, sample_every: 1000, recurrence_tol: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FpuReport {
    pub config: LatticeConfig,
    pub spectra: Vec<ModeSpectrum>,
    pub total_energy: Vec<f64>,
    /// `⟨H_k⟩` over the whole run, `k = 1..N-2`.
    pub time_averages: Vec<f64>,
    pub initial_h1: f64,
    pub recurrence: Option<Recurrence>,
}

impl FpuReport {
    /// `max_{k >= k0} ⟨H_k⟩ / H_1(0)`.
    pub fn high_mode_share(&self, k0: usize) -> f64 {
        self.time_averages[k0 - 1..].iter().cloned().fold(0.0, f64::max) / self.initial_h1
    }

    pub fn energy_drift(&self) -> f64 {
        let e0 = self.total_energy[0];
        self.total_energy.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max) / e0.abs()
    }
}

pub fn fpu_experiment(opts: &FpuOptions) -> Result<FpuReport> {
    let config = LatticeConfig::new(opts.n, opts.alpha, 1.0, 1.0)?;
    let start = LatticeState::from_mode(&config, opts.mode, opts.amplitude)?;
    let t_end = opts.periods * config.linear_period();
    let run = fpu::simulate(&start, &config, opts.dt, t_end, opts.sample_every).map_err(|e| e.at("fpu integration"))?;
    let sample_dt = opts.dt * opts.sample_every as f64;
    let time_averages = (0..config.mode_count())
        .map(|k| {
            let series: Vec<f64> = run.spectra.iter().map(|s| s.energy[k]).collect();
            fpu::time_average(&series, sample_dt)
        })
        .collect::<Result<_>>()?;
    let rec_opts = RecurrenceOptions { guard: 2.0 * config.linear_period(), tol: opts.recurrence_tol, require_departure: true };
    let recurrence = fpu::detect_recurrence(&run.spectra, &rec_opts);
    let initial_h1 = run.spectra[0].mode(opts.mode);
    Ok(FpuReport { config, spectra: run.spectra, total_energy: run.total_energy, time_averages, initial_h1, recurrence })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZkOptions {
    pub m: usize,
    pub dt: f64,
    pub delta: f64,
    /// Run length in units of the breaking time.
    pub t_end: f64,
    /// Sampling interval in units of the breaking time.
    pub sample_interval: f64,
    pub prominence: f64,
}

impl Default for ZkOptions {
    fn default() -> Self {
        Self { m: 512, dt: 1e-4, delta: 0.022, t_end: 36.0, sample_interval: 0.005, prominence: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZkSample {
    pub t: f64,
    pub count: usize,
    /// Best circular-shift correlation with the initial profile.
    pub correlation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZkReport {
    pub breaking_time: f64,
    pub samples: Vec<ZkSample>,
    pub final_field: PeriodicField,
}

impl ZkReport {
    fn window(&self, lo: f64, hi: f64) -> impl Iterator<Item = &ZkSample> {
        let tb = self.breaking_time;
        self.samples.iter().filter(move |s| s.t > lo * tb && s.t <= hi * tb)
    }

    /// Largest count for `t ∈ (lo T_B, hi T_B]` and the first time it occurs.
    pub fn max_count(&self, lo: f64, hi: f64) -> Option<(usize, f64)> {
        self.window(lo, hi).fold(None, |acc, s| match acc {
            Some((c, _)) if c >= s.count => acc,
            _ => Some((s.count, s.t)),
        })
    }

    pub fn first_time_with_count(&self, lo: f64, hi: f64, count: usize) -> Option<f64> {
        self.window(lo, hi).find(|s| s.count == count).map(|s| s.t)
    }

    pub fn best_correlation(&self, lo: f64, hi: f64) -> Option<(f64, f64)> {
        self.window(lo, hi).fold(None, |acc, s| match acc {
            Some((c, _)) if c >= s.correlation => acc,
            _ => Some((s.correlation, s.t)),
        })
    }
}

/// `u_t + u u_x + δ² u_xxx = 0` from `cos(πx)` on `[0, 2)`.
pub fn zk_experiment(opts: &ZkOptions) -> Result<ZkReport> {
    let u0 = PeriodicField::sample_real(opts.m, 2.0, 0.0, |x| (PI * x).cos());
    let tb = pde::breaking_time(&u0)?.ok_or_else(|| Error::Precondition("initial profile never breaks".into()))?;
    let mut cfg = SplitStepConfig::zabusky_kruskal(opts.dt);
    cfg.delta2 = opts.delta * opts.delta;
    let every = ((opts.sample_interval * tb / opts.dt).round() as usize).max(1);
    let mut solver = pde::SplitStepSolver::for_field(&u0, cfg)?;
    let steps = (opts.t_end * tb / opts.dt).round() as usize;
    let reference = u0.re();
    let mut field = u0.clone();
    let mut samples = Vec::with_capacity(steps / every + 1);
    let mut done = 0;
    loop {
        let correlation = pde::max_shift_correlation(&field.re(), &reference)?;
        samples.push(ZkSample { t: field.t, count: pde::count_solitons_with(&field, opts.prominence), correlation });
        if done >= steps {
            break;
        }
        let chunk = every.min(steps - done);
        solver.advance(&mut field, chunk).map_err(|e| e.at("zk integration"))?;
        done += chunk;
        field.t = opts.dt * done as f64;
    }
    Ok(ZkReport { breaking_time: tb, samples, final_field: field })
}

/// Peak position and height of a `u_t + 6uu_x + u_xxx = 0` soliton tracked through a split-step run.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedReport {
    pub amplitude: f64,
    pub speed: f64,
    pub track: Vec<(f64, f64, f64)>,
}

pub fn soliton_speed(a: f64, m: usize, length: f64, dt: f64, t_end: f64, samples: usize) -> Result<SpeedReport> {
    let x0 = -0.25 * length;
    let u0 = PeriodicField::sample_real(m, length, -0.5 * length, |x| pde::kdv_standard_soliton(a, x, 0.0, x0));
    let every = ((t_end / dt / samples as f64).round() as usize).max(1);
    let traj = pde::evolve(&u0, SplitStepConfig::new(Equation::KdvStandard, dt), t_end, every)?;
    let mut track = Vec::with_capacity(traj.len());
    let mut last: Option<f64> = None;
    let mut unwrap = 0.0;
    for f in &traj {
        let peaks = pde::refined_peaks(f, 0.5)?;
        let &(x, h) = peaks
            .iter()
            .max_by(|p, q| p.1.total_cmp(&q.1))
            .ok_or_else(|| Error::Argument(format!("no peak found at t = {}", f.t)).at("peak tracking"))?;
        if let Some(prev) = last {
            if x + unwrap < prev - 0.5 * length {
                unwrap += length;
            }
        }
        last = Some(x + unwrap);
        track.push((f.t, x + unwrap, h));
    }
    let (speed, _) = pde::linear_fit(&track.iter().map(|p| (p.0, p.1)).collect::<Vec<_>>());
    let amplitude = track.iter().map(|p| p.2).sum::<f64>() / track.len() as f64;
    Ok(SpeedReport { amplitude, speed, track })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollisionOptions {
    /// Bound-state wavenumbers; pulse heights are `2κ²`.
    pub kappas: (f64, f64),
    pub m: usize,
    pub length: f64,
    pub dt: f64,
    /// The run covers `t ∈ [-t_half, t_half]`.
    pub t_half: f64,
}

impl Default for CollisionOptions {
    fn default() -> Self {
        Self { kappas: (0.5, 1.0), m: 1024, length: 80.0, dt: 1e-3, t_half: 6.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollisionReport {
    /// Heights sorted descending.
    pub incoming: Vec<f64>,
    pub outgoing: Vec<f64>,
    pub expected: Vec<f64>,
    /// Largest `|u_numeric + u_exact|` at the end of the run (the exact field solves the `-6uu_x` form).
    pub final_error: f64,
    pub initial: PeriodicField,
    pub final_field: PeriodicField,
}

/// Evolve the exact two-soliton through its collision and compare pulse heights before and after.
pub fn soliton_collision(opts: &CollisionOptions) -> Result<CollisionReport> {
    let (k1, k2) = opts.kappas;
    let exact = |x: f64, t: f64| glm::kdv_two_soliton(2.0 * k1, 2.0 * k2, x, t);
    let x0 = -0.5 * opts.length;
    let h = opts.length / opts.m as f64;
    let sample = |t: f64| -> Result<PeriodicField> {
        let v: Vec<f64> = (0..opts.m).map(|j| exact(x0 + j as f64 * h, t).map(|u| -u)).collect::<Result<_>>()?;
        let mut f = PeriodicField::from_real(&v, opts.length);
        f.x0 = x0;
        f.t = -opts.t_half;
        Ok(f)
    };
    let initial = sample(-opts.t_half)?;
    let traj = pde::evolve(&initial, SplitStepConfig::new(Equation::KdvStandard, opts.dt), 2.0 * opts.t_half, usize::MAX)?;
    let final_field = traj.last().cloned().expect("evolve returns the initial field");
    let heights = |f: &PeriodicField| -> Result<Vec<f64>> {
        let mut p: Vec<f64> = pde::refined_peaks(f, 0.05)?.into_iter().map(|p| p.1).collect();
        p.sort_by(|a, b| b.total_cmp(a));
        Ok(p)
    };
    let end = sample(opts.t_half)?;
    let final_error = final_field.values.iter().zip(&end.values).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let mut expected = vec![2.0 * k1 * k1, 2.0 * k2 * k2];
    expected.sort_by(|a, b| b.total_cmp(a));
    Ok(CollisionReport { incoming: heights(&initial)?, outgoing: heights(&final_field)?, expected, final_error, initial, final_field })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringEvolutionReport {
    pub initial: Vec<(f64, f64)>,
    pub evolved: Vec<(f64, f64)>,
    pub t: f64,
}

/// Evolve a reflectionless potential by `u_t - 6uu_x + u_xxx = 0` in a periodic box and
/// re-measure its bound states.
pub fn scattering_evolution(kappas: &[f64], t: f64, half_width: f64, m: usize, dt: f64) -> Result<ScatteringEvolutionReport> {
    let spec = SolitonSpecKdV::centred(&kappas.iter().map(|&k| (k, 0.0)).collect::<Vec<_>>())?;
    let h = 2.0 * half_width / m as f64;
    let xs: Vec<f64> = (0..=m).map(|j| -half_width + j as f64 * h).collect();
    let u0 = LinePotential::new(glm::reflectionless_potential(&spec, &xs)?, half_width)?;
    let initial = scattering::bound_states(&u0).map_err(|e| e.at("initial bound states"))?;
    // The solver integrates w_t + 6ww_x + w_xxx = 0, so evolve w = -u.
    let mut w = u0.to_periodic();
    w.values.iter_mut().for_each(|v| *v = -*v);
    let traj = pde::evolve(&w, SplitStepConfig::new(Equation::KdvStandard, dt), t, usize::MAX)?;
    let mut ut = traj.last().cloned().expect("evolve returns the initial field");
    ut.values.iter_mut().for_each(|v| *v = Complex64::new(-v.re, 0.0));
    let u1 = LinePotential::with_tolerance({
        let mut u = ut.re();
        u.push(u[0]);
        u
    }, half_width, 1e-8)?;
    let evolved = scattering::bound_states(&u1).map_err(|e| e.at("evolved bound states"))?;
    Ok(ScatteringEvolutionReport {
        initial: initial.iter().map(|b| (b.kappa, b.c)).collect(),
        evolved: evolved.iter().map(|b| (b.kappa, b.c)).collect(),
        t,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IstRoundTrip {
    pub x: Vec<f64>,
    pub input: Vec<f64>,
    pub reconstructed: Vec<f64>,
    pub sup_error: f64,
    pub recovered: Vec<(f64, f64)>,
    pub max_reflection: f64,
}

/// Sample the reflectionless potential for `kappas` (all centred at the origin), run direct
/// scattering on `[-half_width, half_width]`, and invert on `x_grid` by GLM.
pub fn ist_roundtrip(kappas: &[f64], t: f64, half_width: f64, m: usize, x_grid: &[f64]) -> Result<IstRoundTrip> {
    let spec = SolitonSpecKdV::centred(&kappas.iter().map(|&k| (k, 0.0)).collect::<Vec<_>>())?;
    let u0 = LinePotential::sample(m, half_width, |x| glm::reflectionless_potential(&spec, &[x]).map(|v| v[0]).unwrap_or(f64::NAN))?;
    let trace = glm::ist_solve(&u0, t, x_grid, &IstOptions::default())?;
    let input = glm::reflectionless_potential(&spec.evolve(t), x_grid)?;
    let sup_error = input.iter().zip(&trace.u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(IstRoundTrip {
        x: x_grid.to_vec(),
        input,
        reconstructed: trace.u,
        sup_error,
        recovered: trace.initial.bound.clone(),
        max_reflection: trace.initial.reflection.iter().map(|r| r.1.norm()).fold(0.0, f64::max),
    })
}

/// Smooth random potential: a few Gaussians with random complex weights, centres and widths.
pub fn random_su2_potential(seed: u64, m: usize, half_width: f64) -> Result<SU2Potential> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bumps: Vec<(Complex64, f64, f64)> = (0..3)
        .map(|_| {
            let w = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            (w, rng.random_range(-2.0..2.0), rng.random_range(0.7..1.5))
        })
        .collect();
    SU2Potential::sample(m, half_width, |x| bumps.iter().map(|&(w, c, s)| w * (-((x - c) / s).powi(2)).exp()).sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct HierarchyReport {
    pub seed: u64,
    /// Largest entry error of `Q_1 - u` and `Q_2 - (its closed form)`.
    pub q1_error: f64,
    pub q2_error: f64,
    pub hamiltonians: Vec<f64>,
    /// `brackets[k][l] = {H_k, H_l}` and the matching scales.
    pub brackets: Vec<Vec<f64>>,
    pub scales: Vec<Vec<f64>>,
    pub max_relative_bracket: f64,
    pub max_drift: f64,
}

pub fn hierarchy_experiment(seed: u64, kmax: usize) -> Result<HierarchyReport> {
    let pot = random_su2_potential(seed, 512, 16.0)?;
    let seq = zs_akns::recursion_q(&pot, kmax + 2)?;
    let qx = pot.grid().derivative(pot.q(), 1);
    let i = Complex64::i();
    let mut q1_error = 0.0f64;
    let mut q2_error = 0.0f64;
    for j in 0..pot.len() {
        q1_error = q1_error.max((seq.q[1][j] - pot.u(j)).iter().map(|v| v.norm()).fold(0.0, f64::max));
        let q = pot.q()[j];
        let n = q.norm_sqr();
        let q2 = zs_akns::Mat2::new(0.5 * i * n, 0.5 * i * qx[j], 0.5 * i * qx[j].conj(), -0.5 * i * n);
        q2_error = q2_error.max((seq.q[2][j] - q2).iter().map(|v| v.norm()).fold(0.0, f64::max));
    }
    let hamiltonians = (0..=kmax).map(|k| seq.hamiltonian(k)).collect::<Result<_>>()?;
    let mut brackets = vec![vec![0.0; kmax + 1]; kmax + 1];
    let mut scales = vec![vec![0.0; kmax + 1]; kmax + 1];
    let mut worst = 0.0f64;
    for k in 0..=kmax {
        for l in 0..=kmax {
            brackets[k][l] = seq.bracket(k, l)?;
            scales[k][l] = seq.bracket_scale(k, l)?;
            worst = worst.max(brackets[k][l].abs() / scales[k][l]);
        }
    }
    let max_drift = seq.drift.iter().cloned().fold(0.0, f64::max);
    Ok(HierarchyReport { seed, q1_error, q2_error, hamiltonians, brackets, scales, max_relative_bracket: worst, max_drift })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DressingReport {
    pub z: Complex64,
    pub b: Complex64,
    pub x: Vec<f64>,
    pub t: Vec<f64>,
    /// `q[n][j]` at `(x_j, t_n)` from dressing.
    pub q: Vec<Vec<Complex64>>,
    pub closed_form_error: f64,
    /// Mismatch against the closed form with its exponent taken literally.
    pub literal_form_error: f64,
}

pub fn dressing_experiment(z: Complex64, b: Complex64, x: &[f64], t: &[f64]) -> Result<DressingReport> {
    let mut q = Vec::with_capacity(t.len());
    let mut closed = 0.0f64;
    let mut literal = 0.0f64;
    for &tn in t {
        let row: Vec<Complex64> = x.iter().map(|&xj| zs_akns::dressing_one_soliton(z, b, xj, tn, 2)).collect::<Result<_>>()?;
        for (&xj, v) in x.iter().zip(&row) {
            closed = closed.max((v - zs_akns::nls_soliton(z, b, xj, tn)).norm());
            literal = literal.max((v - zs_akns::nls_soliton_real_exponent(z, b, xj, tn)).norm());
        }
        q.push(row);
    }
    Ok(DressingReport { z, b, x: x.to_vec(), t: t.to_vec(), q, closed_form_error: closed, literal_form_error: literal })
}
