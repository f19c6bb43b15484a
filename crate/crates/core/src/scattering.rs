//! Direct scattering for `L = -d²/dx² + u` on the line: bound states and norming
//! constants, Jost coefficients, scattering-data evolution under
//! `u_t - 6uu_x + u_xxx = 0`, action variables and the Lax commutator identity.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fourier::FourierGrid;
use crate::pde::PeriodicField;

pub const DEFAULT_TAIL_TOL: f64 = 1e-10;
pub const K_MIN: f64 = 1e-3;

/// Real potential sampled at `x_j = -X + j·2X/(M-1)`, endpoints included.
#[derive(Debug, Clone, PartialEq)]
pub struct LinePotential {
    u: Vec<f64>,
    half_width: f64,
    tail_tol: f64,
}

impl LinePotential {
    pub fn new(u: Vec<f64>, half_width: f64) -> Result<Self> {
        Self::with_tolerance(u, half_width, DEFAULT_TAIL_TOL)
    }

    pub fn with_tolerance(u: Vec<f64>, half_width: f64, tail_tol: f64) -> Result<Self> {
        if u.len() < 16 {
            return Err(Error::Config("potential needs at least 16 samples".into()));
        }
        if !(half_width > 0.0) {
            return Err(Error::Config(format!("half width must be positive, got {half_width}")));
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("potential has non-finite samples".into()));
        }
        let (first, last) = (u[0].abs(), u[u.len() - 1].abs());
        if first > tail_tol || last > tail_tol {
            return Err(Error::Precondition(format!(
                "potential has not decayed at the box edges (|u(-X)| = {first:e}, |u(X)| = {last:e}, tol {tail_tol:e})"
            )));
        }
        Ok(Self { u, half_width, tail_tol })
    }

    pub fn sample(m: usize, half_width: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let h = 2.0 * half_width / (m - 1) as f64;
        Self::new((0..m).map(|j| f(-half_width + j as f64 * h)).collect(), half_width)
    }

    /// Wrap a periodic field on `[-X, X)`, repeating the first sample at `x = X`.
    pub fn from_periodic(field: &PeriodicField) -> Result<Self> {
        let half = 0.5 * field.length;
        if (field.x0 + half).abs() > 1e-9 * half {
            return Err(Error::Config("periodic field must start at -L/2".into()));
        }
        let mut u = field.re();
        u.push(u[0]);
        Self::new(u, half)
    }

    /// Periodic field on `[-X, X)` dropping the duplicated endpoint.
    pub fn to_periodic(&self) -> PeriodicField {
        let m = self.u.len() - 1;
        let mut f = PeriodicField::from_real(&self.u[..m], 2.0 * self.half_width);
        f.x0 = -self.half_width;
        f
    }

    pub fn values(&self) -> &[f64] {
        &self.u
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn tail_tol(&self) -> f64 {
        self.tail_tol
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.u.len() - 1) as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.spacing()
    }

    pub fn grid_points(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.x(j)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundState {
    pub kappa: f64,
    pub c: f64,
    /// Max of `|-ψ'' + uψ + κ²ψ|` with a sixth-order stencil, relative to `max|ψ|`.
    pub residual: f64,
    /// L²-normalised eigenfunction on the potential grid.
    pub eigenfunction: Vec<f64>,
}

/// Number of eigenvalues of the symmetric tridiagonal `(d, e)` below `lambda`.
fn sturm_count(d: &[f64], e: f64, lambda: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for (i, &di) in d.iter().enumerate() {
        let off = if i == 0 { 0.0 } else { e * e / q };
        q = di - lambda - off;
        if q == 0.0 {
            q = -1e-300;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn tridiagonal_solve(d: &[f64], e: f64, shift: f64, rhs: &[f64]) -> Vec<f64> {
    let n = d.len();
    let mut c = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut b = d[0] - shift;
    c[0] = e / b;
    y[0] = rhs[0] / b;
    for i in 1..n {
        b = d[i] - shift - e * c[i - 1];
        if b == 0.0 {
            b = 1e-300;
        }
        c[i] = e / b;
        y[i] = (rhs[i] - e * y[i - 1]) / b;
    }
    for i in (0..n - 1).rev() {
        y[i] -= c[i] * y[i + 1];
    }
    y
}

/// Numerov sweep for `ψ'' = fψ` seeded at `start` and its outer neighbour, filling through `end`.
fn numerov_real(f: &[f64], h: f64, psi: &mut [f64], start: usize, end: usize) {
    let h12 = h * h / 12.0;
    if end > start {
        for n in start..end {
            let a = 1.0 - h12 * f[n + 1];
            psi[n + 1] = (2.0 * (1.0 + 5.0 * h12 * f[n]) * psi[n] - (1.0 - h12 * f[n - 1]) * psi[n - 1]) / a;
            if psi[n + 1].abs() > 1e200 {
                for v in psi[..=n + 1].iter_mut() {
                    *v *= 1e-200;
                }
            }
        }
    } else {
        for n in (end + 1..=start).rev() {
            let a = 1.0 - h12 * f[n - 1];
            psi[n - 1] = (2.0 * (1.0 + 5.0 * h12 * f[n]) * psi[n] - (1.0 - h12 * f[n + 1]) * psi[n + 1]) / a;
            if psi[n - 1].abs() > 1e200 {
                for v in psi[n - 1..].iter_mut() {
                    *v *= 1e-200;
                }
            }
        }
    }
}

struct Shot {
    mismatch: f64,
    psi: Vec<f64>,
}

fn shoot(u: &LinePotential, kappa: f64, m: usize) -> Shot {
    let n = u.len();
    let h = u.spacing();
    let f: Vec<f64> = u.u.iter().map(|v| v + kappa * kappa).collect();
    let mut left = vec![0.0; n];
    left[0] = 1.0;
    left[1] = (kappa * h).exp();
    numerov_real(&f, h, &mut left, 1, m + 1);
    let mut right = vec![0.0; n];
    right[n - 1] = 1.0;
    right[n - 2] = (kappa * h).exp();
    numerov_real(&f, h, &mut right, n - 2, m - 1);
    let sl = 1.0 / left[m];
    let sr = 1.0 / right[m];
    let mismatch = (left[m + 1] - left[m - 1]) * sl - (right[m + 1] - right[m - 1]) * sr;
    let mut psi = vec![0.0; n];
    for j in 0..=m {
        psi[j] = left[j] * sl;
    }
    for j in m + 1..n {
        psi[j] = right[j] * sr;
    }
    Shot { mismatch, psi }
}

fn refine_kappa(u: &LinePotential, kappa0: f64, m: usize) -> (f64, Vec<f64>) {
    let mut k0 = kappa0;
    let mut k1 = kappa0 * (1.0 + 1e-6) + 1e-9;
    let mut g0 = shoot(u, k0, m).mismatch;
    let mut g1 = shoot(u, k1, m).mismatch;
    for _ in 0..60 {
        if g1 == g0 {
            break;
        }
        let k2 = k1 - g1 * (k1 - k0) / (g1 - g0);
        if !k2.is_finite() || k2 <= 0.0 || (k2 - kappa0).abs() > 0.1 * kappa0 + 1e-3 {
            break;
        }
        k0 = k1;
        g0 = g1;
        k1 = k2;
        g1 = shoot(u, k1, m).mismatch;
        if (k1 - k0).abs() <= 1e-14 * k1.max(1.0) {
            break;
        }
    }
    let kappa = if (k1 - kappa0).abs() <= 0.1 * kappa0 + 1e-3 { k1 } else { kappa0 };
    (kappa, shoot(u, kappa, m).psi)
}

fn sixth_order_residual(u: &LinePotential, kappa: f64, psi: &[f64]) -> f64 {
    let h2 = u.spacing().powi(2);
    let w = [1.0 / 90.0, -3.0 / 20.0, 1.5, -49.0 / 18.0, 1.5, -3.0 / 20.0, 1.0 / 90.0];
    let scale = psi.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let mut worst = 0.0f64;
    for j in 3..psi.len() - 3 {
        let d2: f64 = (0..7).map(|s| w[s] * psi[j + s - 3]).sum::<f64>() / h2;
        let r = -d2 + (u.u[j] + kappa * kappa) * psi[j];
        worst = worst.max(r.abs());
    }
    worst / scale
}

fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    if n % 2 == 1 {
        let mut s = values[0] + values[n - 1];
        for (j, v) in values.iter().enumerate().take(n - 1).skip(1) {
            s += if j % 2 == 1 { 4.0 } else { 2.0 } * v;
        }
        s * h / 3.0
    } else {
        let inner: f64 = values[1..n - 1].iter().sum();
        h * (inner + 0.5 * (values[0] + values[n - 1]))
    }
}

/// Discrete eigenvalues `-κ_n²` with norming constants, sorted by `κ` descending.
pub fn bound_states(u: &LinePotential) -> Result<Vec<BoundState>> {
    let n = u.len();
    let h = u.spacing();
    let d: Vec<f64> = u.u[1..n - 1].iter().map(|v| 2.0 / (h * h) + v).collect();
    let e = -1.0 / (h * h);
    let threshold = -1e-8;
    let count = sturm_count(&d, e, threshold);
    let lower = u.u.iter().cloned().fold(0.0, f64::min) - 1.0;
    let mut out = Vec::with_capacity(count);
    for idx in 0..count {
        let (mut lo, mut hi) = (lower, threshold);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if sturm_count(&d, e, mid) > idx {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 1e-14 * hi.abs().max(1.0) {
                break;
            }
        }
        let lambda = 0.5 * (lo + hi);
        if lambda > -1e-6 {
            return Err(Error::IllConditioned(format!("eigenvalue {lambda:e} is too close to the continuum edge")));
        }
        // One or two inverse iterations locate the bulk of the eigenfunction.
        let mut v: Vec<f64> = (0..d.len()).map(|i| 1.0 + 0.01 * (i as f64).sin()).collect();
        for _ in 0..3 {
            v = tridiagonal_solve(&d, e, lambda * (1.0 + 1e-10) - 1e-12, &v);
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            for x in v.iter_mut() {
                *x /= norm;
            }
        }
        let peak = v
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
            .map(|(i, _)| i + 1)
            .unwrap();
        let m = peak.clamp(2, n - 3);
        let (kappa, mut psi) = refine_kappa(u, (-lambda).sqrt(), m);
        let norm2 = simpson(&psi.iter().map(|p| p * p).collect::<Vec<_>>(), h);
        let s = 1.0 / norm2.sqrt();
        for p in psi.iter_mut() {
            *p *= s;
        }
        let x = u.half_width;
        let window: Vec<f64> = (0..n)
            .filter(|&j| {
                let xj = u.x(j);
                xj >= 0.6 * x && xj <= 0.8 * x
            })
            .map(|j| psi[j] * (kappa * u.x(j)).exp())
            .collect();
        if window.is_empty() {
            return Err(Error::Config("grid too coarse for the norming-constant window".into()));
        }
        let c = (window.iter().sum::<f64>() / window.len() as f64).abs();
        let residual = sixth_order_residual(u, kappa, &psi);
        out.push(BoundState { kappa, c, residual, eigenfunction: psi });
    }
    out.sort_by(|a, b| b.kappa.partial_cmp(&a.kappa).unwrap());
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JostCoefficients {
    pub k: f64,
    /// Transmission: `ψ_k ~ a e^{-ikx}` as `x → -∞`.
    pub a: Complex64,
    /// Reflection: `ψ_k ~ e^{-ikx} + b e^{ikx}` as `x → +∞`.
    pub b: Complex64,
    /// Spread of the connection coefficients read off at two tail locations.
    pub residual: f64,
}

/// Jost coefficients at wavenumber `k > 0` by a Numerov sweep from `-X`,
/// matched to the lattice-consistent plane waves in both tails.
pub fn jost_coefficients(u: &LinePotential, k: f64) -> Result<JostCoefficients> {
    if !(k >= K_MIN) {
        return Err(Error::IllConditioned(format!("wavenumber {k} is below k_min = {K_MIN}")));
    }
    let n = u.len();
    let h = u.spacing();
    let h12 = h * h / 12.0;
    let cos_kh = (1.0 - 5.0 * h12 * k * k) / (1.0 + h12 * k * k);
    if cos_kh.abs() >= 1.0 {
        return Err(Error::IllConditioned(format!("wavenumber {k} is unresolved by the grid")));
    }
    let kt = cos_kh.acos() / h;
    let f: Vec<f64> = u.u.iter().map(|v| v - k * k).collect();
    let wave = |sign: f64, x: f64| Complex64::new(0.0, sign * kt * x).exp();
    let mut psi = vec![Complex64::new(0.0, 0.0); n];
    psi[0] = wave(-1.0, u.x(0));
    psi[1] = wave(-1.0, u.x(1));
    for j in 1..n - 1 {
        let a = 1.0 - h12 * f[j + 1];
        psi[j + 1] = (2.0 * (1.0 + 5.0 * h12 * f[j]) * psi[j] - (1.0 - h12 * f[j - 1]) * psi[j - 1]) / a;
    }
    let connect = |i: usize| {
        let (x1, x2) = (u.x(i), u.x(i + 1));
        let (m11, m12, m21, m22) = (wave(-1.0, x1), wave(1.0, x1), wave(-1.0, x2), wave(1.0, x2));
        let det = m11 * m22 - m12 * m21;
        let alpha = (psi[i] * m22 - m12 * psi[i + 1]) / det;
        let beta = (m11 * psi[i + 1] - m21 * psi[i]) / det;
        (alpha, beta)
    };
    let (alpha, beta) = connect(n - 2);
    let (alpha2, beta2) = connect(n - 3);
    if alpha.norm() < 1e-300 || !alpha.re.is_finite() {
        return Err(Error::IllConditioned(format!("transmission blew up at k = {k}")));
    }
    let a = 1.0 / alpha;
    let b = beta / alpha;
    let residual = ((1.0 / alpha2 - a).norm()).max((beta2 / alpha2 - b).norm());
    Ok(JostCoefficients { k, a, b, residual })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringData {
    /// `(κ_n, c_n)` sorted by `κ` descending.
    pub bound: Vec<(f64, f64)>,
    /// `(k, b(k))` for `k > 0`; `b(-k) = conj b(k)` is implied.
    pub reflection: Vec<(f64, Complex64)>,
    pub transmission: Vec<(f64, Complex64)>,
}

impl ScatteringData {
    pub fn reflectionless(bound: Vec<(f64, f64)>) -> Self {
        Self { bound, reflection: Vec::new(), transmission: Vec::new() }
    }
}

/// `count` log-spaced wavenumbers in `[lo, hi]`.
pub fn log_k_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect()
}

/// Default sampling: 64 log-spaced points in `[0.1, 8]`.
pub fn default_k_grid() -> Vec<f64> {
    log_k_grid(0.1, 8.0, 64)
}

/// Bound states plus Jost coefficients on `k_grid`.
pub fn scattering_data(u: &LinePotential, k_grid: &[f64]) -> Result<ScatteringData> {
    let bound = bound_states(u).map_err(|e| e.at("bound states"))?;
    let jost: Vec<JostCoefficients> = k_grid
        .par_iter()
        .map(|&k| jost_coefficients(u, k))
        .collect::<Result<_>>()
        .map_err(|e| e.at("jost coefficients"))?;
    Ok(ScatteringData {
        bound: bound.iter().map(|b| (b.kappa, b.c)).collect(),
        reflection: jost.iter().map(|j| (j.k, j.b)).collect(),
        transmission: jost.iter().map(|j| (j.k, j.a)).collect(),
    })
}

/// Closed-form evolution under `u_t - 6uu_x + u_xxx = 0`.
pub fn evolve_scattering_data(sd: &ScatteringData, t: f64) -> ScatteringData {
    ScatteringData {
        bound: sd.bound.iter().map(|&(kappa, c)| (kappa, c * (4.0 * kappa.powi(3) * t).exp())).collect(),
        reflection: sd
            .reflection
            .iter()
            .map(|&(k, b)| (k, b * Complex64::new(0.0, 8.0 * k.powi(3) * t).exp()))
            .collect(),
        transmission: sd.transmission.clone(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionAngle {
    pub k: f64,
    /// `(k/π) log(1 + |b|²)`.
    pub p: f64,
    /// `arg b`, absent where `b = 0`.
    pub q: Option<f64>,
}

pub fn action_variables(sd: &ScatteringData) -> Vec<ActionAngle> {
    sd.reflection
        .iter()
        .map(|&(k, b)| ActionAngle {
            k,
            p: k / std::f64::consts::PI * (b.norm_sqr()).ln_1p(),
            q: if b.norm() == 0.0 { None } else { Some(b.arg()) },
        })
        .collect()
}

/// Max over the test functions of `|([B, L] - (6uu_x - u_xxx)) ψ|` with
/// `L = -∂² + u` and `B = -4∂³ + 3(u∂ + ∂u)`, all derivatives spectral.
pub fn lax_commutator_check(u: &PeriodicField, psis: &[Vec<f64>]) -> Result<f64> {
    let grid = u.grid()?;
    let uv = u.re();
    let ux = grid.derivative_real(&uv, 1);
    let uxxx = grid.derivative_real(&uv, 3);
    let apply_l = |p: &[f64]| -> Vec<f64> {
        let p2 = grid.derivative_real(p, 2);
        p.iter().zip(&p2).zip(&uv).map(|((a, d), w)| -d + w * a).collect()
    };
    let apply_b = |p: &[f64]| -> Vec<f64> {
        let p1 = grid.derivative_real(p, 1);
        let p3 = grid.derivative_real(p, 3);
        let up: Vec<f64> = p.iter().zip(&uv).map(|(a, w)| a * w).collect();
        let dup = grid.derivative_real(&up, 1);
        (0..p.len()).map(|j| -4.0 * p3[j] + 3.0 * (uv[j] * p1[j] + dup[j])).collect()
    };
    let check = |p: &Vec<f64>| -> Result<f64> {
        if p.len() != uv.len() {
            return Err(Error::Argument("test function does not match the potential grid".into()));
        }
        let blp = apply_b(&apply_l(p));
        let lbp = apply_l(&apply_b(p));
        Ok((0..p.len())
            .map(|j| (blp[j] - lbp[j] - (6.0 * uv[j] * ux[j] - uxxx[j]) * p[j]).abs())
            .fold(0.0, f64::max))
    };
    psis.iter().map(check).try_fold(0.0f64, |acc, r| r.map(|v| acc.max(v)))
}

/// Fourier interpolation of a periodic real profile onto `new_m` points.
pub fn fourier_resample(values: &[f64], length: f64, new_m: usize) -> Result<Vec<f64>> {
    let m = values.len();
    let g = FourierGrid::new(m, length)?;
    let g2 = FourierGrid::new(new_m, length)?;
    let spec = g.to_spectrum(&values.iter().map(|&v| Complex64::new(v, 0.0)).collect::<Vec<_>>());
    let mut out = vec![Complex64::new(0.0, 0.0); new_m];
    let half = m.min(new_m) / 2;
    for j in 0..half {
        out[j] = spec[j];
        if j > 0 {
            out[new_m - j] = spec[m - j];
        }
    }
    let scale = new_m as f64 / m as f64;
    for v in out.iter_mut() {
        *v *= scale;
    }
    Ok(g2.from_spectrum(&out).into_iter().map(|v| v.re).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poschl_teller(depth_l: f64, m: usize) -> LinePotential {
        LinePotential::sample(m, 20.0, |x| -depth_l * (depth_l + 1.0) / x.cosh().powi(2)).unwrap()
    }

    #[test]
    fn free_line_has_no_bound_states() {
        let u = LinePotential::new(vec![0.0; 1024], 20.0).unwrap();
        assert!(bound_states(&u).unwrap().is_empty());
        let j = jost_coefficients(&u, 1.3).unwrap();
        assert!((j.a - 1.0).norm() < 1e-12);
        assert!(j.b.norm() < 1e-12);
    }

    #[test]
    fn sech_squared_well() {
        let u = poschl_teller(1.0, 4096);
        let bs = bound_states(&u).unwrap();
        assert_eq!(bs.len(), 1);
        assert!((bs[0].kappa - 1.0).abs() < 1e-8, "kappa = {}", bs[0].kappa);
        assert!(bs[0].residual < 1e-8, "residual = {}", bs[0].residual);
        // ψ = sech(x)/√2 so c = √2.
        assert!((bs[0].c - 2f64.sqrt()).abs() < 1e-6, "c = {}", bs[0].c);
    }

    #[test]
    fn undecayed_potential_is_rejected() {
        let r = LinePotential::sample(256, 5.0, |x| -1.0 / (1.0 + x * x));
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn small_k_is_ill_conditioned() {
        let u = poschl_teller(1.0, 1024);
        assert!(matches!(jost_coefficients(&u, 1e-4), Err(Error::IllConditioned(_))));
    }

    #[test]
    fn evolution_examples() {
        let sd = ScatteringData::reflectionless(vec![(1.0, 1.0)]);
        let e = evolve_scattering_data(&sd, 0.5);
        assert!((e.bound[0].1 - 2f64.exp()).abs() < 1e-12);
        assert_eq!(evolve_scattering_data(&sd, 0.0), sd);
    }

    #[test]
    fn action_of_unit_reflection() {
        let sd = ScatteringData {
            bound: vec![],
            reflection: vec![(2.0, Complex64::new(0.0, 1.0)), (1.0, Complex64::new(0.0, 0.0))],
            transmission: vec![],
        };
        let av = action_variables(&sd);
        assert!((av[0].p - 2.0 / std::f64::consts::PI * 2f64.ln()).abs() < 1e-15);
        assert!((av[0].q.unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert!(av[1].q.is_none() && av[1].p == 0.0);
    }
}
