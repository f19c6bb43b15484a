//! The 2×2 ZS-AKNS layer: the NLS hierarchy recursion and Hamiltonians, zero-curvature
//! checks for the KdV, NLS and sine-Gordon Lax pairs, normalized eigenfunctions of
//! compactly supported potentials, and rational loop-group dressing.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fourier::FourierGrid;
use crate::pde::{self, Equation, PeriodicField, SplitStepConfig};

pub type Mat2 = Matrix2<Complex64>;
pub type Vec2 = Vector2<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// `a = diag(-i, i)`.
pub fn a_matrix() -> Mat2 {
    Mat2::new(-I, ZERO, ZERO, I)
}

pub fn commutator(x: &Mat2, y: &Mat2) -> Mat2 {
    x * y - y * x
}

pub fn offdiag(m: &Mat2) -> Mat2 {
    Mat2::new(ZERO, m[(0, 1)], m[(1, 0)], ZERO)
}

pub fn diag_part(m: &Mat2) -> Mat2 {
    Mat2::new(m[(0, 0)], ZERO, ZERO, m[(1, 1)])
}

/// Inverse of `ad(a)` on off-diagonal matrices: `[a, X]_12 = -2i X_12`, `[a, X]_21 = 2i X_21`.
pub fn ad_a_inverse(m: &Mat2) -> Mat2 {
    Mat2::new(ZERO, m[(0, 1)] / (-2.0 * I), m[(1, 0)] / (2.0 * I), ZERO)
}

/// `‖M + M*‖`, zero for skew-adjoint matrices.
pub fn skew_adjoint_defect(m: &Mat2) -> f64 {
    (m + m.adjoint()).norm()
}

/// `e^{a s} = diag(e^{-is}, e^{is})`.
pub fn exp_a(s: Complex64) -> Mat2 {
    Mat2::new((-I * s).exp(), ZERO, ZERO, (I * s).exp())
}

/// `u(x) = offdiag(q, -conj q)` sampled on the periodic grid `x_j = -X + j 2X / M`.
#[derive(Debug, Clone)]
pub struct SU2Potential {
    field: PeriodicField,
    grid: FourierGrid,
}

pub const DEFAULT_TAIL_TOL: f64 = 1e-10;

impl SU2Potential {
    pub fn new(q: Vec<Complex64>, half_width: f64) -> Result<Self> {
        Self::with_tolerance(q, half_width, DEFAULT_TAIL_TOL)
    }

    pub fn with_tolerance(q: Vec<Complex64>, half_width: f64, tail_tol: f64) -> Result<Self> {
        let grid = FourierGrid::new(q.len(), 2.0 * half_width)?;
        let tail = q[0].norm().max(q[q.len() - 1].norm());
        if !(tail <= tail_tol) {
            return Err(Error::Precondition(format!("|q| = {tail:e} at the box edge exceeds {tail_tol:e}")));
        }
        if q.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("potential has non-finite samples".into()));
        }
        let mut field = PeriodicField::from_complex(q, 2.0 * half_width);
        field.x0 = -half_width;
        Ok(Self { field, grid })
    }

    pub fn sample(m: usize, half_width: f64, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let h = 2.0 * half_width / m as f64;
        Self::new((0..m).map(|j| f(-half_width + j as f64 * h)).collect(), half_width)
    }

    pub fn from_field(field: &PeriodicField) -> Result<Self> {
        let half = 0.5 * field.length;
        if (field.x0 + half).abs() > 1e-12 * half.max(1.0) {
            return Err(Error::Argument("field must start at -L/2".into()));
        }
        Self::new(field.values.clone(), half)
    }

    pub fn q(&self) -> &[Complex64] {
        &self.field.values
    }

    pub fn field(&self) -> &PeriodicField {
        &self.field
    }

    pub fn grid(&self) -> &FourierGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.field.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.field.values.is_empty()
    }

    pub fn half_width(&self) -> f64 {
        0.5 * self.field.length
    }

    pub fn spacing(&self) -> f64 {
        self.field.spacing()
    }

    pub fn x(&self, j: usize) -> f64 {
        self.field.x(j)
    }

    pub fn grid_points(&self) -> Vec<f64> {
        self.field.grid_points()
    }

    pub fn u(&self, j: usize) -> Mat2 {
        let q = self.field.values[j];
        Mat2::new(ZERO, q, -q.conj(), ZERO)
    }

    /// `∫ |q|²`.
    pub fn mass(&self) -> f64 {
        self.grid.integrate(&self.field.values.iter().map(|v| v.norm_sqr()).collect::<Vec<_>>())
    }
}

/// `Q_0..Q_jmax` on the grid with `Q_k = P_k + T_k`.
#[derive(Debug, Clone)]
pub struct MatrixSequenceQ {
    pub q: Vec<Vec<Mat2>>,
    /// `|∫ [u, P_k]|`: the amount by which `T_k` fails to return to zero at `+X`.
    pub drift: Vec<f64>,
    grid: FourierGrid,
}

impl MatrixSequenceQ {
    pub fn jmax(&self) -> usize {
        self.q.len() - 1
    }

    pub fn p(&self, k: usize) -> Vec<Mat2> {
        self.q[k].iter().map(offdiag).collect()
    }

    pub fn t(&self, k: usize) -> Vec<Mat2> {
        self.q[k].iter().map(diag_part).collect()
    }

    /// Precondition error when some `T_k` does not decay at `+X`.
    pub fn check_decay(&self, tol: f64) -> Result<()> {
        match self.drift.iter().enumerate().find(|(_, &d)| d > tol) {
            Some((k, d)) => Err(Error::Precondition(format!(
                "T_{k} drifts by {d:e} at the right edge; potential outside the regular class"
            ))),
            None => Ok(()),
        }
    }

    pub fn max_skew_adjoint_defect(&self, k: usize) -> f64 {
        self.q[k].iter().map(skew_adjoint_defect).fold(0.0, f64::max)
    }

    fn require(&self, k: usize) -> Result<()> {
        if k > self.jmax() {
            return Err(Error::Argument(format!("Q_{k} not computed (jmax = {})", self.jmax())));
        }
        Ok(())
    }

    /// `q_t` of the j-th flow `u_t = [a, Q_{j+1}]`.
    pub fn flow(&self, j: usize) -> Result<Vec<Complex64>> {
        if j == 0 {
            return Err(Error::Argument("flow index starts at 1".into()));
        }
        self.require(j + 1)?;
        let a = a_matrix();
        Ok(self.q[j + 1].iter().map(|m| commutator(&a, m)[(0, 1)]).collect())
    }

    /// `H_k = -1/(k+1) ∫ tr(Q_{k+2} a)`.
    pub fn hamiltonian(&self, k: usize) -> Result<f64> {
        self.require(k + 2)?;
        let a = a_matrix();
        let dens: Vec<Complex64> = self.q[k + 2].iter().map(|m| (m * a).trace()).collect();
        Ok(-self.grid.integrate_complex(&dens).re / (k as f64 + 1.0))
    }

    /// `(Q_{k+1})_12`; the L² gradient of `H_k` is `-2` times this in the `q` coordinate.
    pub fn gradient_entry(&self, k: usize) -> Result<Vec<Complex64>> {
        self.require(k + 1)?;
        Ok(self.q[k + 1].iter().map(|m| m[(0, 1)]).collect())
    }

    /// `∫ ⟨⟨[a, Q_{k+1}], Q_{l+1}⟩⟩` with the Killing form `-½ tr(XY)`.
    pub fn bracket(&self, k: usize, l: usize) -> Result<f64> {
        self.require(k.max(l) + 1)?;
        let a = a_matrix();
        let dens: Vec<Complex64> = self.q[k + 1]
            .iter()
            .zip(&self.q[l + 1])
            .map(|(qk, ql)| -0.5 * (commutator(&a, qk) * ql).trace())
            .collect();
        Ok(self.grid.integrate_complex(&dens).re)
    }

    /// Product of the Killing L² norms of `[a, Q_{k+1}]` and `P_{l+1}`.
    pub fn bracket_scale(&self, k: usize, l: usize) -> Result<f64> {
        self.require(k.max(l) + 1)?;
        let a = a_matrix();
        let norm = |f: &dyn Fn(&Mat2) -> Mat2, m: &[Mat2]| -> f64 {
            let d: Vec<f64> = m.iter().map(|x| 0.5 * f(x).norm_squared()).collect();
            self.grid.integrate(&d).sqrt()
        };
        Ok(norm(&|x| commutator(&a, x), &self.q[k + 1]) * norm(&offdiag, &self.q[l + 1]))
    }
}

/// `P_{k+1} = ad(a)⁻¹((P_k)_x + [T_k, u])`, `T_{k+1} = ∫_{-X}^x [u, P_{k+1}]`, from `Q_0 = a`.
pub fn recursion_q(pot: &SU2Potential, jmax: usize) -> Result<MatrixSequenceQ> {
    let grid = pot.grid().clone();
    let m = pot.len();
    let u: Vec<Mat2> = (0..m).map(|j| pot.u(j)).collect();
    let mut q = vec![vec![a_matrix(); m]];
    let mut drift = vec![0.0];
    for k in 0..jmax {
        let prev = &q[k];
        let p12: Vec<Complex64> = prev.iter().map(|x| x[(0, 1)]).collect();
        let p21: Vec<Complex64> = prev.iter().map(|x| x[(1, 0)]).collect();
        let (d12, d21) = (grid.derivative(&p12, 1), grid.derivative(&p21, 1));
        let p_next: Vec<Mat2> = (0..m)
            .map(|j| {
                let px = Mat2::new(ZERO, d12[j], d21[j], ZERO);
                ad_a_inverse(&(px + commutator(&diag_part(&prev[j]), &u[j])))
            })
            .collect();
        let c: Vec<Mat2> = (0..m).map(|j| commutator(&u[j], &p_next[j])).collect();
        let c11: Vec<Complex64> = c.iter().map(|x| x[(0, 0)]).collect();
        let c22: Vec<Complex64> = c.iter().map(|x| x[(1, 1)]).collect();
        drift.push(grid.integrate_complex(&c11).norm() + grid.integrate_complex(&c22).norm());
        let (t11, t22) = (grid.cumulative(&c11), grid.cumulative(&c22));
        q.push((0..m).map(|j| p_next[j] + Mat2::new(t11[j], ZERO, ZERO, t22[j])).collect());
    }
    Ok(MatrixSequenceQ { q, drift, grid })
}

pub fn nls_flow_rhs(pot: &SU2Potential, j: usize) -> Result<Vec<Complex64>> {
    recursion_q(pot, j + 1)?.flow(j)
}

pub fn hamiltonian_h(pot: &SU2Potential, k: usize) -> Result<f64> {
    recursion_q(pot, k + 2)?.hamiltonian(k)
}

pub fn poisson_bracket(pot: &SU2Potential, k: usize, l: usize) -> Result<f64> {
    recursion_q(pot, k.max(l) + 1)?.bracket(k, l)
}

/// `⟨u₁, u₂⟩ = Re ∫ q₁ conj(q₂)`.
pub fn su2_inner_product(grid: &FourierGrid, q1: &[Complex64], q2: &[Complex64]) -> f64 {
    let d: Vec<f64> = q1.iter().zip(q2).map(|(a, b)| (a * b.conj()).re).collect();
    grid.integrate(&d)
}

/// Values of `q` and its first two x-derivatives at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub q: Complex64,
    pub qx: Complex64,
    pub qxx: Complex64,
}

/// The three Lax pairs `A = aλ + u`, `B = B(u, λ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaxPairSpec {
    /// `u = offdiag(q, -1)`, flow `q_t = -¼(6 q q_x + q_xxx)`.
    KdvAkns,
    /// `u = offdiag(q, -conj q)`, flow `q_t = (i/2)(q_xx + 2|q|² q)`.
    NlsZs,
    /// `u = offdiag(-q_x/2, q_x/2)`, flow `q_xt = sin q`.
    SgeAkns,
}

impl std::str::FromStr for LaxPairSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kdv" | "kdv-akns" => Ok(Self::KdvAkns),
            "nls" | "nls-zs" => Ok(Self::NlsZs),
            "sge" | "sge-akns" => Ok(Self::SgeAkns),
            _ => Err(Error::Argument(format!("unknown Lax pair '{s}' (kdv, nls, sge)"))),
        }
    }
}

impl LaxPairSpec {
    pub fn u(self, jet: &Jet) -> Mat2 {
        match self {
            Self::KdvAkns => Mat2::new(ZERO, jet.q, -ONE, ZERO),
            Self::NlsZs => Mat2::new(ZERO, jet.q, -jet.q.conj(), ZERO),
            Self::SgeAkns => Mat2::new(ZERO, -0.5 * jet.qx, 0.5 * jet.qx, ZERO),
        }
    }

    pub fn a(self, jet: &Jet, lambda: Complex64) -> Mat2 {
        a_matrix() * lambda + self.u(jet)
    }

    pub fn b(self, jet: &Jet, lambda: Complex64) -> Mat2 {
        let a = a_matrix();
        let (q, qx, qxx) = (jet.q, jet.qx, jet.qxx);
        match self {
            Self::KdvAkns => {
                let b1 = Mat2::new(0.5 * I * q, 0.5 * I * qx, ZERO, -0.5 * I * q);
                let b0 = Mat2::new(-0.25 * qx, -0.5 * q * q - 0.25 * qxx, 0.5 * q, 0.25 * qx);
                a * lambda.powu(3) + self.u(jet) * lambda * lambda + b1 * lambda + b0
            }
            Self::NlsZs => {
                let n = q.norm_sqr();
                let q2 = Mat2::new(0.5 * I * n, 0.5 * I * qx, 0.5 * I * qx.conj(), -0.5 * I * n);
                a * lambda * lambda + self.u(jet) * lambda + q2
            }
            Self::SgeAkns => {
                let (c, s) = (q.cos(), q.sin());
                Mat2::new(c, s, s, -c) * (0.25 * I / lambda)
            }
        }
    }
}

/// Time-sampled field on a uniform (not necessarily periodic) x-grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ZccTrajectory {
    pub x0: f64,
    pub dx: f64,
    pub dt: f64,
    /// `q[n][j]` at `t_n = n dt`, `x_j = x0 + j dx`.
    pub q: Vec<Vec<Complex64>>,
}

impl ZccTrajectory {
    pub fn sample(x0: f64, dx: f64, nx: usize, t0: f64, dt: f64, nt: usize, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let q = (0..nt)
            .map(|n| (0..nx).map(|j| f(x0 + j as f64 * dx, t0 + n as f64 * dt)).collect())
            .collect();
        Self { x0, dx, dt, q }
    }
}

const FD8: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
const FD_HALF: usize = 4;

fn fd8<T>(v: &[T], j: usize, h: f64) -> T
where
    T: Copy + std::ops::Sub<Output = T> + std::ops::Mul<Complex64, Output = T> + std::ops::Add<Output = T>,
{
    let mut acc = (v[j + 1] - v[j - 1]) * Complex64::from(FD8[0]);
    for (s, &c) in FD8.iter().enumerate().skip(1) {
        acc = acc + (v[j + s + 1] - v[j - s - 1]) * Complex64::from(c);
    }
    acc * Complex64::from(1.0 / h)
}

/// `max ‖A_t - B_x + sign·[A, B]‖` over interior samples and `lambdas`; `sign = 1` is flatness
/// of `d - A dx - B dt` for `ψ_x = Aψ`, `ψ_t = Bψ`.
pub fn zcc_residual_with_sign(spec: LaxPairSpec, traj: &ZccTrajectory, lambdas: &[Complex64], sign: f64) -> Result<f64> {
    let nt = traj.q.len();
    let nx = traj.q.first().map_or(0, |r| r.len());
    if nt < 5 {
        return Err(Error::Argument("need at least five time samples".into()));
    }
    if nx < 6 * FD_HALF + 1 || traj.q.iter().any(|r| r.len() != nx) {
        return Err(Error::Argument("time samples must share an x-grid of at least 25 points".into()));
    }
    let h = traj.dx;
    let jets: Vec<Vec<Option<Jet>>> = traj
        .q
        .iter()
        .map(|row| {
            let d1: Vec<Complex64> =
                (0..nx).map(|j| if j >= FD_HALF && j + FD_HALF < nx { fd8(row, j, h) } else { ZERO }).collect();
            (0..nx)
                .map(|j| {
                    (j >= 2 * FD_HALF && j + 2 * FD_HALF < nx).then(|| Jet { q: row[j], qx: d1[j], qxx: fd8(&d1, j, h) })
                })
                .collect()
        })
        .collect();
    let mut worst = 0.0f64;
    for &lambda in lambdas {
        for n in 2..nt - 2 {
            let bs: Vec<Option<Mat2>> = jets[n].iter().map(|j| j.map(|jet| spec.b(&jet, lambda))).collect();
            for j in 3 * FD_HALF..nx - 3 * FD_HALF {
                let at = |m: usize| spec.a(&jets[m][j].unwrap(), lambda);
                let a_t = (at(n - 2) - at(n + 2) + (at(n + 1) - at(n - 1)) * Complex64::from(8.0))
                    * Complex64::from(1.0 / (12.0 * traj.dt));
                let window: Vec<Mat2> = (j - FD_HALF..=j + FD_HALF).map(|i| bs[i].unwrap()).collect();
                let b_x = fd8(&window, FD_HALF, h);
                let a = at(n);
                let b = bs[j].unwrap();
                let r = a_t - b_x + commutator(&a, &b) * Complex64::from(sign);
                worst = worst.max(r.norm());
            }
        }
    }
    Ok(worst)
}

pub fn zcc_residual(spec: LaxPairSpec, traj: &ZccTrajectory, lambdas: &[Complex64]) -> Result<f64> {
    zcc_residual_with_sign(spec, traj, lambdas, 1.0)
}

/// Normalized eigenfunction data for one `λ ∉ ℝ`.
#[derive(Debug, Clone)]
pub struct CompactScattering {
    pub lambda: Complex64,
    /// `s^u(λ)` from the forward transport `φ(-X) = I`; may be non-finite for large `|Im λ| X`.
    pub s: Mat2,
    /// `s_11` in the upper half-plane, `s_22` in the lower: its zeros are the poles of `m`.
    pub s_diag: Complex64,
    /// `m^u(x_j, λ)` on the grid plus the right edge `x = X`.
    pub m: Vec<Mat2>,
    /// `|m(-X) - I|`.
    pub normalization_defect: f64,
    pub sup_norm: f64,
}

pub const POLE_TOL: f64 = 1e-10;

/// Potential at midpoints by band-limited interpolation, interleaved with the grid values,
/// closed periodically so index `2M` is `x = X`.
fn refined(pot: &SU2Potential) -> Vec<Complex64> {
    let m = pot.len();
    let spec = pot.grid().to_spectrum(pot.q());
    let fine = FourierGrid::new(2 * m, 2.0 * pot.half_width()).expect("doubled grid is valid");
    let mut padded = vec![ZERO; 2 * m];
    for (j, &c) in spec.iter().enumerate() {
        let idx = if j < m / 2 {
            j
        } else if j == m / 2 {
            padded[m + m / 2] += 0.5 * c;
            m / 2
        } else {
            j + m
        };
        padded[idx] += if j == m / 2 { 0.5 * c } else { c };
    }
    let mut out: Vec<Complex64> = fine.from_spectrum(&padded).into_iter().map(|v| v * 2.0).collect();
    out.push(out[0]);
    out
}

/// Lawson RK4 for `y' = diag(l) y + u(x) y`, stepping from grid index `start` toward `end`.
fn transport_column(r: &[Complex64], l: [Complex64; 2], h: f64, y0: Vec2, forward: bool) -> Vec<Vec2> {
    let m = (r.len() - 1) / 2;
    let n_of = |q: Complex64, y: &Vec2| Vec2::new(q * y[1], -q.conj() * y[0]);
    let step = if forward { h } else { -h };
    let e = |s: f64, y: &Vec2| Vec2::new((l[0] * s).exp() * y[0], (l[1] * s).exp() * y[1]);
    let mut out = vec![Vec2::zeros(); m + 1];
    let mut y = y0;
    let idx: Vec<usize> = if forward { (0..=m).collect() } else { (0..=m).rev().collect() };
    out[idx[0]] = y;
    for w in idx.windows(2) {
        let (i0, i1) = (w[0], w[1]);
        let (q0, qm, q1) = (r[2 * i0], r[i0 + i1], r[2 * i1]);
        let (hh, hc) = (Complex64::from(step / 2.0), Complex64::from(step));
        let k1 = n_of(q0, &y);
        let k2 = n_of(qm, &e(step / 2.0, &(y + k1 * hh)));
        let k3 = n_of(qm, &(e(step / 2.0, &y) + k2 * hh));
        let k4 = n_of(q1, &(e(step, &y) + e(step / 2.0, &k3) * hc));
        y = e(step, &y) + (e(step, &k1) + e(step / 2.0, &(k2 + k3)) * Complex64::from(2.0) + k4) * (hc / 6.0);
        out[i1] = y;
    }
    out
}

fn check_lambda(lambda: Complex64) -> Result<()> {
    if !(lambda.im.abs() >= 1e-12) || !lambda.is_finite() {
        return Err(Error::Argument(format!("lambda = {lambda} must be finite and off the real axis")));
    }
    Ok(())
}

/// `s_11(λ)` (upper half-plane) by forward transport of the first column.
pub fn s11(pot: &SU2Potential, lambda: Complex64) -> Result<Complex64> {
    check_lambda(lambda)?;
    let r = refined(pot);
    let col = transport_column(&r, [ZERO, 2.0 * I * lambda], pot.spacing(), Vec2::new(ONE, ZERO), true);
    Ok(col[pot.len()][0])
}

/// `s_22(λ)` (lower half-plane) by forward transport of the second column.
pub fn s22(pot: &SU2Potential, lambda: Complex64) -> Result<Complex64> {
    check_lambda(lambda)?;
    let r = refined(pot);
    let col = transport_column(&r, [-2.0 * I * lambda, ZERO], pot.spacing(), Vec2::new(ZERO, ONE), true);
    Ok(col[pot.len()][1])
}

/// Normalized eigenfunction `m^u(·, λ)` for `u` supported inside the box.
///
/// The column that decays toward `+X` is transported forward from `-X`; the other is
/// transported backward from `+X`, where boundedness fixes it to `(0, 1/s_11)` (upper) or
/// `(1/s_22, 0)` (lower).
pub fn compact_support_scattering(pot: &SU2Potential, lambda: Complex64) -> Result<CompactScattering> {
    check_lambda(lambda)?;
    let r = refined(pot);
    let h = pot.spacing();
    let m = pot.len();
    let xe = pot.half_width();
    let l1 = [ZERO, 2.0 * I * lambda];
    let l2 = [-2.0 * I * lambda, ZERO];
    let e1 = Vec2::new(ONE, ZERO);
    let e2 = Vec2::new(ZERO, ONE);
    let phi1 = transport_column(&r, l1, h, e1, true);
    let phi2 = transport_column(&r, l2, h, e2, true);
    let phi_end = Mat2::from_columns(&[phi1[m], phi2[m]]);
    // Jost data: Φ = φ e^{aλx} equals e^{aλx} s beyond the support.
    let s = exp_a(-lambda * xe) * phi_end * exp_a(lambda * xe);
    let upper = lambda.im > 0.0;
    let (s_diag, cols): (Complex64, Vec<Mat2>) = if upper {
        let s11 = phi1[m][0];
        if s11.norm() < POLE_TOL {
            return Err(Error::Pole(format!("s_11({lambda}) = {s11:e} vanishes")));
        }
        let back = transport_column(&r, l2, h, e2, false);
        (s11, (0..=m).map(|j| Mat2::from_columns(&[phi1[j], back[j] / s11])).collect())
    } else {
        let s22 = phi2[m][1];
        if s22.norm() < POLE_TOL {
            return Err(Error::Pole(format!("s_22({lambda}) = {s22:e} vanishes")));
        }
        let back = transport_column(&r, l1, h, e1, false);
        (s22, (0..=m).map(|j| Mat2::from_columns(&[back[j] / s22, phi2[j]])).collect())
    };
    let normalization_defect = (cols[0] - Mat2::identity()).norm();
    let sup_norm = cols.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if !sup_norm.is_finite() {
        return Err(Error::NumericOverflow { stage: "normalized eigenfunction".into(), step: 0 });
    }
    Ok(CompactScattering { lambda, s, s_diag, m: cols, normalization_defect, sup_norm })
}

/// Fit `G(λ) ≈ Σ_{j<n} c_j λ^{-j}` through `n` samples, entrywise and pointwise.
pub fn fit_inverse_powers(lambdas: &[Complex64], values: &[Vec<Mat2>]) -> Result<Vec<Vec<Mat2>>> {
    let n = lambdas.len();
    if n == 0 || values.len() != n {
        return Err(Error::Argument("one value set per lambda".into()));
    }
    let v = DMatrix::from_fn(n, n, |i, j| lambdas[i].powi(-(j as i32)));
    let lu = v.lu();
    let len = values[0].len();
    let mut out = vec![vec![Mat2::zeros(); len]; n];
    for p in 0..len {
        for e in 0..4 {
            let rhs = DVector::from_fn(n, |i, _| values[i][p][e]);
            let c = lu.solve(&rhs).ok_or(Error::LinearAlgebra { condition: f64::INFINITY })?;
            for j in 0..n {
                out[j][p][e] = c[j];
            }
        }
    }
    Ok(out)
}

/// Winding number of `s_11` around the rectangle `[re_lo, re_hi] × [im_lo, im_hi]`.
pub fn count_zeros_s11(pot: &SU2Potential, rect: [f64; 4], per_side: usize) -> Result<usize> {
    let [a, b, c, d] = rect;
    if !(c > 0.0 && d > c && b > a) {
        return Err(Error::Argument("rectangle must lie in the upper half-plane".into()));
    }
    let corners = [Complex64::new(a, c), Complex64::new(b, c), Complex64::new(b, d), Complex64::new(a, d)];
    let mut path = Vec::with_capacity(4 * per_side + 1);
    for k in 0..4 {
        let (p, q) = (corners[k], corners[(k + 1) % 4]);
        for i in 0..per_side {
            path.push(p + (q - p) * (i as f64 / per_side as f64));
        }
    }
    path.push(corners[0]);
    let vals: Vec<Complex64> = path.iter().map(|&l| s11(pot, l)).collect::<Result<_>>()?;
    let mut winding = 0.0;
    for w in vals.windows(2) {
        winding += (w[1] / w[0]).arg();
    }
    Ok((winding / (2.0 * std::f64::consts::PI)).round().max(0.0) as usize)
}

/// Zeros of `s_11` in the rectangle: argument-principle count, then Newton from the smallest
/// grid values of `|s_11|`.
pub fn locate_zeros_s11(pot: &SU2Potential, rect: [f64; 4], grid_n: usize) -> Result<Vec<Complex64>> {
    let count = count_zeros_s11(pot, rect, 4 * grid_n)?;
    let [a, b, c, d] = rect;
    let mut samples = Vec::new();
    for i in 0..grid_n {
        for j in 0..grid_n {
            let l = Complex64::new(
                a + (b - a) * (i as f64 + 0.5) / grid_n as f64,
                c + (d - c) * (j as f64 + 0.5) / grid_n as f64,
            );
            samples.push((s11(pot, l)?.norm(), l));
        }
    }
    samples.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut roots: Vec<Complex64> = Vec::new();
    for &(_, start) in &samples {
        if roots.len() == count {
            break;
        }
        let mut z = start;
        let mut converged = false;
        for _ in 0..50 {
            let f = s11(pot, z)?;
            let dz = 1e-6 * (1.0 + z.norm());
            let df = (s11(pot, z + dz)? - s11(pot, z - dz)?) / (2.0 * dz);
            let step = f / df;
            z -= step;
            if !(z.im > 0.0) {
                break;
            }
            if step.norm() < 1e-13 * (1.0 + z.norm()) {
                converged = true;
                break;
            }
        }
        let inside = z.re >= a && z.re <= b && z.im >= c && z.im <= d;
        if converged && inside && roots.iter().all(|r| (r - z).norm() > 1e-6) {
            roots.push(z);
        }
    }
    if roots.len() != count {
        return Err(Error::Iteration { iterations: samples.len(), residual: (count - roots.len()) as f64 });
    }
    Ok(roots)
}

/// Orthogonal projection onto the line spanned by `v`.
pub fn projection_onto(v: &Vec2) -> Result<Mat2> {
    let n = v.norm_squared();
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::NumericOverflow { stage: "projection".into(), step: 0 });
    }
    Ok(v * v.adjoint() / Complex64::from(n))
}

/// `g_{z,π}(λ) = I + (z - z̄)/(λ - z) π`.
pub fn g_factor(z: Complex64, pi: &Mat2, lambda: Complex64) -> Result<Mat2> {
    let d = lambda - z;
    if d.norm() <= 1e-14 * (1.0 + z.norm()) {
        return Err(Error::Pole(format!("lambda = {lambda} is the pole {z}")));
    }
    Ok(Mat2::identity() + pi * ((z - z.conj()) / d))
}

/// Ordered product of simple factors `g_{z_1,π_1} g_{z_2,π_2} ⋯`.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalLoopElement {
    /// `(z, v)` with `π` the projection onto unit `v`.
    pub poles: Vec<(Complex64, Vec2)>,
}

impl RationalLoopElement {
    pub fn new(poles: Vec<(Complex64, Vec2)>) -> Result<Self> {
        let poles = poles
            .into_iter()
            .map(|(z, v)| {
                if z.im == 0.0 || !z.is_finite() {
                    return Err(Error::Argument(format!("pole {z} must be off the real axis")));
                }
                let n = v.norm();
                if !(n > 0.0 && n.is_finite()) {
                    return Err(Error::Argument("residue vector must be nonzero".into()));
                }
                Ok((z, v / Complex64::from(n)))
            })
            .collect::<Result<_>>()?;
        Ok(Self { poles })
    }

    pub fn eval(&self, lambda: Complex64) -> Result<Mat2> {
        self.poles.iter().try_fold(Mat2::identity(), |acc, (z, v)| Ok(acc * g_factor(*z, &projection_onto(v)?, lambda)?))
    }

    /// `g(λ̄)* g(λ) - I`.
    pub fn reality_defect(&self, lambda: Complex64) -> Result<f64> {
        Ok((self.eval(lambda.conj())?.adjoint() * self.eval(lambda)? - Mat2::identity()).norm())
    }

    /// Residue `lim (λ - z_k) g(λ)` at the k-th (distinct) pole.
    pub fn residue(&self, k: usize) -> Result<Mat2> {
        let zk = self.poles[k].0;
        let mut left = Mat2::identity();
        for (z, v) in &self.poles[..k] {
            left *= g_factor(*z, &projection_onto(v)?, zk)?;
        }
        let mut right = Mat2::identity();
        for (z, v) in &self.poles[k + 1..] {
            right *= g_factor(*z, &projection_onto(v)?, zk)?;
        }
        Ok(left * projection_onto(&self.poles[k].1)? * (zk - zk.conj()) * right)
    }

    /// Spanning vector of the residue line at pole `k`: the image of `Res_{z_k}^*`.
    pub fn residue_line(&self, k: usize) -> Result<Vec2> {
        let r = self.residue(k)?.adjoint();
        let (c0, c1) = (r.column(0).into_owned(), r.column(1).into_owned());
        let v = if c0.norm() >= c1.norm() { c0 } else { c1 };
        let n = v.norm();
        if !(n > 0.0) {
            return Err(Error::NumericOverflow { stage: "residue line".into(), step: k });
        }
        Ok(v / Complex64::from(n))
    }

    /// The same element refactored with the two simple factors in the opposite order.
    pub fn permuted_pair(&self) -> Result<Self> {
        if self.poles.len() != 2 {
            return Err(Error::Argument("permutation needs exactly two factors".into()));
        }
        let (z1, z2) = (self.poles[0].0, self.poles[1].0);
        // Rightmost factor of the new order sits at z1 with the residue line of the product.
        let w1 = self.residue_line(0)?;
        let p1 = projection_onto(&w1)?;
        // Left factor: g_{z2} = f g_{z1,π'}⁻¹, whose residue at z2 spans its line.
        let g1_inv_at_z2 = g_factor(z1, &p1, z2.conj())?.adjoint();
        let res = self.residue(1)? * g1_inv_at_z2;
        let r = (res / (z2 - z2.conj())).adjoint();
        let (c0, c1) = (r.column(0).into_owned(), r.column(1).into_owned());
        let w2 = if c0.norm() >= c1.norm() { c0 } else { c1 };
        Self::new(vec![(z2, w2), (z1, w1)])
    }
}

pub fn rational_loop_product(elems: &[RationalLoopElement], lambda: Complex64) -> Result<Mat2> {
    elems.iter().try_fold(Mat2::identity(), |acc, e| Ok(acc * e.eval(lambda)?))
}

/// `e^{a(z̄ x + z̄^j t)} w`, rescaled so the larger entry has modulus one.
pub fn evolve_residue_line(z: Complex64, w0: &Vec2, x: f64, t: f64, j: u32) -> Vec2 {
    let zb = z.conj();
    let phase = zb * x + zb.powu(j) * t;
    let (e1, e2) = (-I * phase, I * phase);
    let shift = e1.re.max(e2.re);
    Vec2::new((e1 - shift).exp() * w0[0], (e2 - shift).exp() * w0[1])
}

/// Potential `q = 2i (M_1)_{12}` of the vacuum dressed by poles `z_k` with residue lines
/// `w_k(x, t)`; `M(λ) = I + Σ ξ_k w_k* / (λ - z_k)` where `M(z̄_l) w_l = 0`.
pub fn dress_vacuum(poles: &[(Complex64, Vec2)], x: f64, t: f64, j: u32) -> Result<Complex64> {
    let n = poles.len();
    if n == 0 {
        return Ok(ZERO);
    }
    let w: Vec<Vec2> = poles.iter().map(|(z, v)| evolve_residue_line(*z, v, x, t, j)).collect();
    let gamma = DMatrix::from_fn(n, n, |k, l| {
        let (zk, zl) = (poles[k].0, poles[l].0);
        w[k].dotc(&w[l]) / (zl.conj() - zk)
    });
    let lu = gamma.transpose().lu();
    let mut m1 = Mat2::zeros();
    for row in 0..2 {
        let rhs = DVector::from_fn(n, |l, _| -w[l][row]);
        // ξ Γ = -W, solved row by row through Γᵀ.
        let xi = lu
            .solve(&rhs)
            .ok_or_else(|| Error::NumericOverflow { stage: "dressing system".into(), step: row })?;
        for k in 0..n {
            m1[(row, 0)] += xi[k] * w[k][0].conj();
            m1[(row, 1)] += xi[k] * w[k][1].conj();
        }
    }
    let q = 2.0 * I * m1[(0, 1)];
    if !q.is_finite() {
        return Err(Error::NumericOverflow { stage: "dressing".into(), step: 0 });
    }
    Ok(q)
}

/// Successive single-pole dressings in the given order (Bäcklund steps).
pub fn dress_sequential(poles: &[(Complex64, Vec2)], x: f64, t: f64, j: u32) -> Result<Complex64> {
    let mut factors: Vec<(Complex64, Mat2)> = Vec::new();
    for (z, v) in poles {
        let mut w = evolve_residue_line(*z, v, x, t, j);
        // New factors multiply on the left, so the line is pushed through M(z̄) built so far.
        for (zp, p) in &factors {
            w = g_factor(*zp, p, z.conj())? * w;
        }
        factors.push((*z, projection_onto(&w)?));
    }
    let m1: Mat2 = factors.iter().map(|(z, p)| p * (z - z.conj())).sum();
    Ok(2.0 * I * m1[(0, 1)])
}

fn check_soliton_args(z: Complex64, b: Complex64) -> Result<()> {
    if !(z.im > 0.0) {
        return Err(Error::Argument(format!("pole {z} must lie in the upper half-plane")));
    }
    if !(b.norm() < 1.0) {
        return Err(Error::Argument(format!("|b| = {} must be below 1", b.norm())));
    }
    Ok(())
}

/// One-soliton of the j-th flow by dressing the vacuum with the pole `z` and residue line
/// spanned by `(√(1-|b|²), b)`.
pub fn dressing_one_soliton(z: Complex64, b: Complex64, x: f64, t: f64, j: u32) -> Result<Complex64> {
    check_soliton_args(z, b)?;
    let v = Vec2::new(Complex64::from((1.0 - b.norm_sqr()).sqrt()), b);
    let w = evolve_residue_line(z, &v, x, t, j);
    let p = projection_onto(&w)?;
    Ok(-4.0 * z.im * p[(0, 1)])
}

fn soliton_profile(z: Complex64, b: Complex64, x: f64, t: f64, phase: Complex64) -> Complex64 {
    let (r, s) = (z.re, z.im);
    let nb = b.norm_sqr();
    let th = 2.0 * (s * x + 2.0 * r * s * t);
    // Divide through by the larger exponential to keep both terms bounded.
    let shift = th.abs();
    let den = (-th - shift).exp() * (1.0 - nb) + (th - shift).exp() * nb;
    4.0 * s * b * (1.0 - nb).sqrt() * (phase - shift).exp() / den
}

/// One-soliton profile with the exponent `-2irx + (r² - s²)t`, whose time part is real.
pub fn nls_soliton_real_exponent(z: Complex64, b: Complex64, x: f64, t: f64) -> Complex64 {
    let (r, s) = (z.re, z.im);
    soliton_profile(z, b, x, t, Complex64::new((r * r - s * s) * t, -2.0 * r * x))
}

/// The closed form with phase `e^{-2irx - 2i(r² - s²)t}` at parameter `-b̄`; equals
/// [`dressing_one_soliton`] for `j = 2` and solves `q_t = (i/2)(q_xx + 2|q|²q)`.
pub fn nls_soliton(z: Complex64, b: Complex64, x: f64, t: f64) -> Complex64 {
    let (r, s) = (z.re, z.im);
    soliton_profile(z, -b.conj(), x, t, Complex64::new(0.0, -2.0 * r * x - 2.0 * (r * r - s * s) * t))
}

/// Split-step NLS evolution of `q0` on its periodic box, sampled every `sample_every` steps.
pub fn nls_integrate(q0: &PeriodicField, t_end: f64, dt: f64, sample_every: usize) -> Result<Vec<PeriodicField>> {
    pde::evolve(q0, SplitStepConfig::new(Equation::Nls, dt), t_end, sample_every)
}
