//! Fermi–Pasta–Ulam lattice: quadratic-force chain with pinned ends, normal-mode
//! energies and recurrence detection.

use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeConfig {
    /// Oscillator count including both pinned endpoints.
    pub n: usize,
    pub alpha: f64,
    pub c: f64,
    pub h: f64,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        Self { n: 32, alpha: 0.25, c: 1.0, h: 1.0 }
    }
}

impl LatticeConfig {
    pub fn new(n: usize, alpha: f64, c: f64, h: f64) -> Result<Self> {
        let cfg = Self { n, alpha, c, h };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::Config(format!("lattice needs N >= 3, got {}", self.n)));
        }
        if !(self.h > 0.0 && self.c > 0.0) || !self.alpha.is_finite() {
            return Err(Error::Config("lattice needs h > 0, c > 0 and finite alpha".into()));
        }
        Ok(())
    }

    fn stiffness(&self) -> f64 {
        self.c * self.c / (self.h * self.h)
    }

    /// Number of interior normal modes, `N - 2`.
    pub fn mode_count(&self) -> usize {
        self.n - 2
    }

    /// Exact linear frequency of mode `k` (1-based).
    pub fn omega(&self, k: usize) -> f64 {
        2.0 * self.c / self.h * (k as f64 * PI / (2.0 * (self.n - 1) as f64)).sin()
    }

    /// Period of the slowest linear mode.
    pub fn linear_period(&self) -> f64 {
        2.0 * PI / self.omega(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeState {
    pub t: f64,
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

impl LatticeState {
    pub fn at_rest(config: &LatticeConfig) -> Self {
        Self { t: 0.0, x: vec![0.0; config.n], v: vec![0.0; config.n] }
    }

    /// Pure normal mode `k` started from rest: `x_j = A sin(k j pi / (N-1))`.
    pub fn from_mode(config: &LatticeConfig, k: usize, amplitude: f64) -> Result<Self> {
        if k == 0 || k > config.mode_count() {
            return Err(Error::Argument(format!("mode {k} outside 1..={}", config.mode_count())));
        }
        let mut state = Self::at_rest(config);
        let n1 = (config.n - 1) as f64;
        for j in 1..config.n - 1 {
            state.x[j] = amplitude * (k as f64 * j as f64 * PI / n1).sin();
        }
        Ok(state)
    }

    fn check(&self, config: &LatticeConfig) -> Result<()> {
        if self.x.len() != config.n || self.v.len() != config.n {
            return Err(Error::Config(format!(
                "state has {} displacements and {} velocities, lattice has N = {}",
                self.x.len(),
                self.v.len(),
                config.n
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpectrum {
    pub t: f64,
    /// `energy[k-1]` is `H_k`.
    pub energy: Vec<f64>,
}

impl ModeSpectrum {
    pub fn mode(&self, k: usize) -> f64 {
        self.energy[k - 1]
    }
}

pub fn fpu_acceleration(x: &[f64], config: &LatticeConfig) -> Result<Vec<f64>> {
    if x.len() != config.n {
        return Err(Error::Config(format!("expected {} displacements, got {}", config.n, x.len())));
    }
    let mut a = vec![0.0; x.len()];
    accelerate(x, config, &mut a);
    Ok(a)
}

fn accelerate(x: &[f64], config: &LatticeConfig, a: &mut [f64]) {
    let s = config.stiffness();
    let n = x.len();
    a[0] = 0.0;
    a[n - 1] = 0.0;
    for i in 1..n - 1 {
        let lap = x[i + 1] + x[i - 1] - 2.0 * x[i];
        a[i] = s * lap * (1.0 + config.alpha * (x[i + 1] - x[i - 1]));
    }
}

/// One velocity-Verlet step.
pub fn step(state: &LatticeState, dt: f64, config: &LatticeConfig) -> Result<LatticeState> {
    let mut next = state.clone();
    advance(&mut next, dt, 1, config)?;
    Ok(next)
}

/// Advance `steps` velocity-Verlet steps in place, reusing the force evaluation.
pub fn advance(state: &mut LatticeState, dt: f64, steps: usize, config: &LatticeConfig) -> Result<()> {
    config.validate()?;
    state.check(config)?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Argument(format!("time step must be positive, got {dt}")));
    }
    let n = config.n;
    let mut a = vec![0.0; n];
    accelerate(&state.x, config, &mut a);
    let t0 = state.t;
    for s in 0..steps {
        for i in 1..n - 1 {
            state.v[i] += 0.5 * dt * a[i];
            state.x[i] += dt * state.v[i];
        }
        accelerate(&state.x, config, &mut a);
        for i in 1..n - 1 {
            state.v[i] += 0.5 * dt * a[i];
        }
        if !state.x.iter().chain(state.v.iter()).all(|v| v.is_finite()) {
            return Err(Error::NumericOverflow { stage: "fpu velocity-Verlet".into(), step: s });
        }
    }
    state.t = t0 + dt * steps as f64;
    Ok(())
}

fn sine_basis(config: &LatticeConfig) -> Vec<Vec<f64>> {
    let n1 = (config.n - 1) as f64;
    let norm = (2.0 / n1).sqrt();
    (1..=config.mode_count())
        .map(|k| (1..config.n - 1).map(|j| norm * (k as f64 * j as f64 * PI / n1).sin()).collect())
        .collect()
}

/// Orthonormal sine-transform coefficients `(a_k, da_k/dt)` for `k = 1..N-2`.
pub fn mode_coefficients(state: &LatticeState, config: &LatticeConfig) -> Result<Vec<(f64, f64)>> {
    config.validate()?;
    state.check(config)?;
    let basis = sine_basis(config);
    Ok(basis
        .iter()
        .map(|row| {
            let interior = 1..config.n - 1;
            let a = row.iter().zip(&state.x[interior.clone()]).map(|(s, x)| s * x).sum();
            let b = row.iter().zip(&state.v[interior]).map(|(s, v)| s * v).sum();
            (a, b)
        })
        .collect())
}

/// Inverse of [`mode_coefficients`].
pub fn state_from_modes(coeffs: &[(f64, f64)], t: f64, config: &LatticeConfig) -> Result<LatticeState> {
    config.validate()?;
    if coeffs.len() != config.mode_count() {
        return Err(Error::Config(format!("expected {} mode pairs, got {}", config.mode_count(), coeffs.len())));
    }
    let basis = sine_basis(config);
    let mut state = LatticeState::at_rest(config);
    state.t = t;
    for (row, &(a, b)) in basis.iter().zip(coeffs) {
        for (j, s) in row.iter().enumerate() {
            state.x[j + 1] += a * s;
            state.v[j + 1] += b * s;
        }
    }
    Ok(state)
}

pub fn mode_energies(state: &LatticeState, config: &LatticeConfig) -> Result<ModeSpectrum> {
    let coeffs = mode_coefficients(state, config)?;
    let energy = coeffs
        .iter()
        .enumerate()
        .map(|(i, &(a, b))| {
            let w = config.omega(i + 1);
            0.5 * b * b + 0.5 * w * w * a * a
        })
        .collect();
    Ok(ModeSpectrum { t: state.t, energy })
}

/// Kinetic plus bond potential `(c/h)^2 (d^2/2 + alpha d^3/3)` summed over bonds.
pub fn total_energy(state: &LatticeState, config: &LatticeConfig) -> Result<f64> {
    config.validate()?;
    state.check(config)?;
    let kinetic: f64 = state.v.iter().map(|v| 0.5 * v * v).sum();
    let potential: f64 = state
        .x
        .windows(2)
        .map(|w| {
            let d = w[1] - w[0];
            d * d / 2.0 + config.alpha * d * d * d / 3.0
        })
        .sum();
    Ok(kinetic + config.stiffness() * potential)
}

/// Trapezoidal time average of uniformly spaced samples.
pub fn time_average(samples: &[f64], dt: f64) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::Argument("time average needs at least two samples".into()));
    }
    if !(dt > 0.0) {
        return Err(Error::Argument(format!("sample spacing must be positive, got {dt}")));
    }
    let n = samples.len();
    let inner: f64 = samples[1..n - 1].iter().sum();
    let integral = dt * (inner + 0.5 * (samples[0] + samples[n - 1]));
    Ok(integral / (dt * (n - 1) as f64))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecurrenceOptions {
    /// Return events only after this time.
    pub guard: f64,
    /// Relative tolerance on `H_1(t) >= (1 - tol) H_1(0)`.
    pub tol: f64,
    /// Also require that `H_1` has dropped below the threshold at least once before.
    pub require_departure: bool,
}

impl RecurrenceOptions {
    /// Guard of two linear periods of mode 1 and a 1% tolerance.
    pub fn for_config(config: &LatticeConfig) -> Self {
        Self { guard: 2.0 * config.linear_period(), tol: 0.01, require_departure: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Recurrence {
    pub time: f64,
    /// `|H_1(t) - H_1(0)| / H_1(0)`.
    pub deviation: f64,
}

/// Earliest return of mode-1 energy to within `tol` of its initial value.
pub fn detect_recurrence(history: &[ModeSpectrum], opts: &RecurrenceOptions) -> Option<Recurrence> {
    let first = history.first()?;
    let h0 = *first.energy.first()?;
    if h0 <= 0.0 {
        return None;
    }
    let threshold = (1.0 - opts.tol) * h0;
    let mut departed = !opts.require_departure;
    for s in &history[1..] {
        let h1 = s.energy[0];
        if h1 < threshold {
            departed = true;
        } else if departed && s.t > opts.guard {
            return Some(Recurrence { time: s.t, deviation: (h1 - h0).abs() / h0 });
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq)]
pub struct FpuRun {
    pub spectra: Vec<ModeSpectrum>,
    pub total_energy: Vec<f64>,
    pub final_state: LatticeState,
}

/// Integrate to `t_end`, recording mode energies every `sample_every` steps.
pub fn simulate(
    initial: &LatticeState,
    config: &LatticeConfig,
    dt: f64,
    t_end: f64,
    sample_every: usize,
) -> Result<FpuRun> {
    if sample_every == 0 {
        return Err(Error::Argument("sample_every must be at least 1".into()));
    }
    if !(t_end >= 0.0) {
        return Err(Error::Argument(format!("t_end must be non-negative, got {t_end}")));
    }
    let steps = (t_end / dt).round() as usize;
    let mut state = initial.clone();
    let t0 = state.t;
    let mut spectra = vec![mode_energies(&state, config)?];
    let mut energies = vec![total_energy(&state, config)?];
    let mut done = 0;
    while done < steps {
        let chunk = sample_every.min(steps - done);
        advance(&mut state, dt, chunk, config)?;
        done += chunk;
        state.t = t0 + dt * done as f64;
        spectra.push(mode_energies(&state, config)?);
        energies.push(total_energy(&state, config)?);
    }
    Ok(FpuRun { spectra, total_energy: energies, final_state: state })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_site_stencil() {
        let cfg = LatticeConfig::new(4, 1.0, 1.0, 1.0).unwrap();
        let a = fpu_acceleration(&[0.0, 0.1, -0.1, 0.0], &cfg).unwrap();
        assert!((a[1] + 0.27).abs() < 1e-15);
        assert!((a[2] - 0.27).abs() < 1e-15);
        assert_eq!(a[0], 0.0);
        assert_eq!(a[3], 0.0);
    }

    #[test]
    fn length_mismatch_is_config_error() {
        let cfg = LatticeConfig::default();
        assert!(matches!(fpu_acceleration(&[0.0; 5], &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn single_bond_energy() {
        let cfg = LatticeConfig::new(3, 1.0, 1.0, 1.0).unwrap();
        let d = 0.3;
        // Only the middle site moves, so both bonds are stretched by +-d.
        let state = LatticeState { t: 0.0, x: vec![0.0, d, 0.0], v: vec![0.0; 3] };
        let e = total_energy(&state, &cfg).unwrap();
        let bond = |d: f64| d * d / 2.0 + d * d * d / 3.0;
        assert!((e - bond(d) - bond(-d)).abs() < 1e-15);
    }

    #[test]
    fn time_average_basics() {
        assert!((time_average(&[2.0; 10], 0.1).unwrap() - 2.0).abs() < 1e-15);
        let ramp: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        assert!((time_average(&ramp, 0.01).unwrap() - 0.5).abs() < 1e-14);
        assert!(time_average(&[1.0], 0.1).is_err());
    }

    #[test]
    fn monotone_decay_has_no_recurrence() {
        let history: Vec<ModeSpectrum> = (0..200)
            .map(|i| ModeSpectrum { t: i as f64, energy: vec![(-0.01 * i as f64).exp(), 0.0] })
            .collect();
        let opts = RecurrenceOptions { guard: 2.0, tol: 0.01, require_departure: false };
        assert!(detect_recurrence(&history, &opts).is_none());
    }
}
