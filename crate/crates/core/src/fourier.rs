//! Periodic Fourier grid shared by the pseudospectral solvers.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Uniform periodic grid `x_j = x0 + j L / M` with cached FFT plans.
#[derive(Clone)]
pub struct FourierGrid {
    m: usize,
    length: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    k: Vec<f64>,
}

impl fmt::Debug for FourierGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FourierGrid").field("m", &self.m).field("length", &self.length).finish()
    }
}

impl FourierGrid {
    pub fn new(m: usize, length: f64) -> Result<Self> {
        if m < 4 || !m.is_power_of_two() {
            return Err(Error::Config(format!("grid size {m} must be a power of two >= 4")));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::Config(format!("period length {length} must be positive")));
        }
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(m);
        let inverse = planner.plan_fft_inverse(m);
        let k = (0..m)
            .map(|j| {
                let n = if j <= m / 2 { j as f64 } else { j as f64 - m as f64 };
                2.0 * PI * n / length
            })
            .collect();
        Ok(Self { m, length, forward, inverse, k })
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.m as f64
    }

    /// Angular wavenumbers in FFT order; the Nyquist entry is `+pi M / L`.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.k
    }

    /// Index distance of FFT bin `j` from the zero mode.
    pub fn mode_index(&self, j: usize) -> usize {
        if j <= self.m / 2 {
            j
        } else {
            self.m - j
        }
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.forward.process(data);
    }

    /// Inverse transform including the `1/M` normalisation.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.inverse.process(data);
        let s = 1.0 / self.m as f64;
        for v in data.iter_mut() {
            *v *= s;
        }
    }

    pub fn to_spectrum(&self, values: &[Complex64]) -> Vec<Complex64> {
        let mut buf = values.to_vec();
        self.forward(&mut buf);
        buf
    }

    pub fn from_spectrum(&self, spectrum: &[Complex64]) -> Vec<Complex64> {
        let mut buf = spectrum.to_vec();
        self.inverse(&mut buf);
        buf
    }

    /// Multiplier for `d^order/dx^order`; odd orders drop the Nyquist mode.
    pub fn derivative_symbol(&self, j: usize, order: u32) -> Complex64 {
        if order % 2 == 1 && self.m % 2 == 0 && j == self.m / 2 {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::new(0.0, self.k[j]).powu(order)
    }

    pub fn derivative(&self, values: &[Complex64], order: u32) -> Vec<Complex64> {
        if order == 0 {
            return values.to_vec();
        }
        let mut buf = self.to_spectrum(values);
        for (j, v) in buf.iter_mut().enumerate() {
            *v *= self.derivative_symbol(j, order);
        }
        self.inverse(&mut buf);
        buf
    }

    pub fn derivative_real(&self, values: &[f64], order: u32) -> Vec<f64> {
        let c: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.derivative(&c, order).into_iter().map(|v| v.re).collect()
    }

    /// Mean-zero periodic antiderivative; the mean of `values` is discarded.
    pub fn antiderivative(&self, values: &[Complex64]) -> Vec<Complex64> {
        let mut buf = self.to_spectrum(values);
        buf[0] = Complex64::new(0.0, 0.0);
        for (j, v) in buf.iter_mut().enumerate().skip(1) {
            if self.m % 2 == 0 && j == self.m / 2 {
                *v = Complex64::new(0.0, 0.0);
            } else {
                *v /= Complex64::new(0.0, self.k[j]);
            }
        }
        self.inverse(&mut buf);
        buf
    }

    pub fn antiderivative_real(&self, values: &[f64]) -> Vec<f64> {
        let c: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.antiderivative(&c).into_iter().map(|v| v.re).collect()
    }

    /// Running integral `F_j = ∫_{x_0}^{x_j} f`, exact for band-limited data.
    pub fn cumulative(&self, values: &[Complex64]) -> Vec<Complex64> {
        let mean = values.iter().sum::<Complex64>() / self.m as f64;
        let anti = self.antiderivative(values);
        let h = self.spacing();
        anti.iter().enumerate().map(|(j, &f)| mean * (j as f64 * h) + f - anti[0]).collect()
    }

    /// Periodic rectangle-rule integral (spectrally accurate).
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().sum::<f64>() * self.spacing()
    }

    pub fn integrate_complex(&self, values: &[Complex64]) -> Complex64 {
        values.iter().sum::<Complex64>() * self.spacing()
    }

    /// 0/1 mask keeping modes with index at most `fraction * M / 2`.
    pub fn dealias_mask(&self, fraction: f64) -> Vec<f64> {
        let cutoff = fraction * (self.m as f64) / 2.0;
        (0..self.m)
            .map(|j| if (self.mode_index(j) as f64) <= cutoff + 1e-9 { 1.0 } else { 0.0 })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> FourierGrid {
        FourierGrid::new(64, 2.0 * PI).unwrap()
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(FourierGrid::new(100, 1.0).is_err());
        assert!(FourierGrid::new(64, 0.0).is_err());
    }

    #[test]
    fn derivative_of_sine() {
        let g = grid();
        let h = g.spacing();
        let u: Vec<f64> = (0..64).map(|j| (3.0 * j as f64 * h).sin()).collect();
        let du = g.derivative_real(&u, 1);
        let d3 = g.derivative_real(&u, 3);
        for j in 0..64 {
            let x = j as f64 * h;
            assert!((du[j] - 3.0 * (3.0 * x).cos()).abs() < 1e-12);
            assert!((d3[j] + 27.0 * (3.0 * x).cos()).abs() < 1e-10);
        }
    }

    #[test]
    fn cumulative_matches_closed_form() {
        let g = grid();
        let h = g.spacing();
        let f: Vec<Complex64> = (0..64).map(|j| Complex64::new(1.0 + (j as f64 * h).cos(), 0.0)).collect();
        let c = g.cumulative(&f);
        for (j, v) in c.iter().enumerate() {
            let x = j as f64 * h;
            assert!((v.re - (x + x.sin())).abs() < 1e-12);
        }
    }

    #[test]
    fn dealias_two_thirds() {
        let g = grid();
        let mask = g.dealias_mask(2.0 / 3.0);
        assert_eq!(mask.iter().filter(|&&m| m > 0.0).count(), 2 * 21 + 1);
    }
}
