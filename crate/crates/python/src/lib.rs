//! Python bindings. Errors surface as `ValueError` carrying the library message.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use soliton_lab::{fpu, glm, pde, scattering, zs_akns};

fn py_err(e: soliton_lab::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

type Matrix = [[Complex64; 2]; 2];

fn to_nested(m: &zs_akns::Mat2) -> Matrix {
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
}

fn parse_equation(name: &str) -> PyResult<pde::Equation> {
    name.parse().map_err(py_err)
}

/// FPU lattice with fixed ends. `n` counts both pinned sites.
#[pyclass(skip_from_py_object, module = "soliton_lab", name = "Lattice")]
#[derive(Clone)]
struct Lattice {
    config: fpu::LatticeConfig,
    state: fpu::LatticeState,
}

#[pymethods]
impl Lattice {
    #[new]
    #[pyo3(signature = (n=32, alpha=0.25, c=1.0, h=1.0))]
    fn new(n: usize, alpha: f64, c: f64, h: f64) -> PyResult<Self> {
        let config = fpu::LatticeConfig::new(n, alpha, c, h).map_err(py_err)?;
        let state = fpu::LatticeState::at_rest(&config);
        Ok(Self { config, state })
    }

    /// Start from rest in normal mode `k`.
    fn set_mode(&mut self, k: usize, amplitude: f64) -> PyResult<()> {
        self.state = fpu::LatticeState::from_mode(&self.config, k, amplitude).map_err(py_err)?;
        Ok(())
    }

    #[getter]
    fn t(&self) -> f64 {
        self.state.t
    }

    #[getter]
    fn x(&self) -> Vec<f64> {
        self.state.x.clone()
    }

    #[getter]
    fn v(&self) -> Vec<f64> {
        self.state.v.clone()
    }

    fn set_state(&mut self, x: Vec<f64>, v: Vec<f64>) -> PyResult<()> {
        let n = self.config.n;
        if x.len() != n || v.len() != n {
            return Err(PyValueError::new_err(format!("expected {n} displacements and velocities")));
        }
        self.state.x = x;
        self.state.v = v;
        Ok(())
    }

    fn omega(&self, k: usize) -> f64 {
        self.config.omega(k)
    }

    fn linear_period(&self) -> f64 {
        self.config.linear_period()
    }

    /// Velocity Verlet steps.
    fn advance(&mut self, dt: f64, steps: usize) -> PyResult<()> {
        fpu::advance(&mut self.state, dt, steps, &self.config).map_err(py_err)
    }

    /// Harmonic mode energies `[H_1, ..., H_{N-2}]`.
    fn mode_energies(&self) -> PyResult<Vec<f64>> {
        Ok(fpu::mode_energies(&self.state, &self.config).map_err(py_err)?.energy)
    }

    fn total_energy(&self) -> PyResult<f64> {
        fpu::total_energy(&self.state, &self.config).map_err(py_err)
    }

    /// Integrate to `t_end`; returns `(times, mode energies per sample, total energies)`.
    fn simulate(&mut self, dt: f64, t_end: f64, sample_every: usize) -> PyResult<(Vec<f64>, Vec<Vec<f64>>, Vec<f64>)> {
        let run = fpu::simulate(&self.state, &self.config, dt, t_end, sample_every).map_err(py_err)?;
        self.state = run.final_state;
        let t = run.spectra.iter().map(|s| s.t).collect();
        Ok((t, run.spectra.into_iter().map(|s| s.energy).collect(), run.total_energy))
    }

    fn __repr__(&self) -> String {
        format!("Lattice(n={}, alpha={}, t={})", self.config.n, self.config.alpha, self.state.t)
    }
}

/// Periodic samples `values[j]` at `x0 + j L / M`.
#[pyclass(skip_from_py_object, module = "soliton_lab", name = "PeriodicField")]
#[derive(Clone)]
struct PyField {
    inner: pde::PeriodicField,
}

#[pymethods]
impl PyField {
    #[new]
    #[pyo3(signature = (values, length, x0=0.0))]
    fn new(values: Vec<Complex64>, length: f64, x0: f64) -> Self {
        let mut inner = pde::PeriodicField::from_complex(values, length);
        inner.x0 = x0;
        Self { inner }
    }

    #[getter]
    fn values(&self) -> Vec<Complex64> {
        self.inner.values.clone()
    }

    #[getter]
    fn real(&self) -> Vec<f64> {
        self.inner.re()
    }

    #[getter]
    fn x(&self) -> Vec<f64> {
        self.inner.grid_points()
    }

    #[getter]
    fn t(&self) -> f64 {
        self.inner.t
    }

    #[getter]
    fn length(&self) -> f64 {
        self.inner.length
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Split-step evolution; returns the fields sampled every `sample_every` steps.
    #[pyo3(signature = (equation, dt, t_end, sample_every=usize::MAX, delta=0.022))]
    fn evolve(&self, equation: &str, dt: f64, t_end: f64, sample_every: usize, delta: f64) -> PyResult<Vec<PyField>> {
        let mut cfg = pde::SplitStepConfig::new(parse_equation(equation)?, dt);
        cfg.delta2 = delta * delta;
        let traj = pde::evolve(&self.inner, cfg, t_end, sample_every).map_err(py_err)?;
        Ok(traj.into_iter().map(|inner| PyField { inner }).collect())
    }

    fn count_solitons(&self) -> usize {
        pde::count_solitons(&self.inner)
    }

    /// Inviscid Burgers breaking time `-1 / min u_0'`, or `None`.
    fn breaking_time(&self) -> PyResult<Option<f64>> {
        pde::breaking_time(&self.inner).map_err(py_err)
    }

    /// `(∫u, ∫u², ∫(-u³ + u_x²/2))`.
    fn kdv_conserved(&self) -> PyResult<(f64, f64, f64)> {
        pde::kdv_conserved(&self.inner).map_err(py_err)
    }
}

/// Real potential sampled at `M` points spanning `[-X, X]`.
#[pyclass(skip_from_py_object, module = "soliton_lab", name = "LinePotential")]
#[derive(Clone)]
struct PyLinePotential {
    inner: scattering::LinePotential,
}

#[pymethods]
impl PyLinePotential {
    #[new]
    fn new(values: Vec<f64>, half_width: f64) -> PyResult<Self> {
        Ok(Self { inner: scattering::LinePotential::new(values, half_width).map_err(py_err)? })
    }

    #[getter]
    fn x(&self) -> Vec<f64> {
        self.inner.grid_points()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    /// `[(κ, c), ...]` sorted by decreasing κ.
    fn bound_states(&self) -> PyResult<Vec<(f64, f64)>> {
        Ok(scattering::bound_states(&self.inner).map_err(py_err)?.iter().map(|b| (b.kappa, b.c)).collect())
    }

    /// Jost coefficients `(a, b)` at wavenumber `k`.
    fn jost(&self, k: f64) -> PyResult<(Complex64, Complex64)> {
        let j = scattering::jost_coefficients(&self.inner, k).map_err(py_err)?;
        Ok((j.a, j.b))
    }

    #[pyo3(signature = (k_grid=None))]
    fn scattering_data(&self, k_grid: Option<Vec<f64>>) -> PyResult<ScatteringData> {
        let ks = k_grid.unwrap_or_else(scattering::default_k_grid);
        Ok(ScatteringData { inner: scattering::scattering_data(&self.inner, &ks).map_err(py_err)? })
    }

    /// Direct scattering, evolution to `t` and GLM reconstruction on `x`.
    fn ist_solve(&self, t: f64, x: Vec<f64>) -> PyResult<Vec<f64>> {
        Ok(glm::ist_solve(&self.inner, t, &x, &glm::IstOptions::default()).map_err(py_err)?.u)
    }
}

#[pyclass(skip_from_py_object, module = "soliton_lab")]
#[derive(Clone)]
struct ScatteringData {
    inner: scattering::ScatteringData,
}

#[pymethods]
impl ScatteringData {
    #[new]
    #[pyo3(signature = (bound, reflection=Vec::new()))]
    fn new(bound: Vec<(f64, f64)>, reflection: Vec<(f64, Complex64)>) -> Self {
        Self { inner: scattering::ScatteringData { bound, reflection, transmission: Vec::new() } }
    }

    #[getter]
    fn bound(&self) -> Vec<(f64, f64)> {
        self.inner.bound.clone()
    }

    #[getter]
    fn reflection(&self) -> Vec<(f64, Complex64)> {
        self.inner.reflection.clone()
    }

    #[getter]
    fn transmission(&self) -> Vec<(f64, Complex64)> {
        self.inner.transmission.clone()
    }

    fn evolve(&self, t: f64) -> Self {
        Self { inner: scattering::evolve_scattering_data(&self.inner, t) }
    }

    /// GLM reconstruction of the potential on `x`.
    fn potential(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        let kernel = glm::GlmKernel::from_scattering(&self.inner);
        glm::glm_potential(&kernel, &x, &glm::NystromConfig::default()).map_err(py_err)
    }

    fn actions<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        scattering::action_variables(&self.inner)
            .iter()
            .map(|a| {
                let d = PyDict::new(py);
                d.set_item("k", a.k)?;
                d.set_item("p", a.p)?;
                d.set_item("q", a.q)?;
                Ok(d)
            })
            .collect()
    }
}

/// Reflectionless KdV data `[(κ, c), ...]`.
#[pyclass(skip_from_py_object, module = "soliton_lab")]
#[derive(Clone)]
struct SolitonSpec {
    inner: glm::SolitonSpecKdV,
}

#[pymethods]
impl SolitonSpec {
    #[new]
    fn new(solitons: Vec<(f64, f64)>) -> PyResult<Self> {
        Ok(Self { inner: glm::SolitonSpecKdV::new(solitons).map_err(py_err)? })
    }

    /// Pulses at the given centres: `[(κ, x0), ...]`.
    #[staticmethod]
    fn centred(kappas_and_centres: Vec<(f64, f64)>) -> PyResult<Self> {
        Ok(Self { inner: glm::SolitonSpecKdV::centred(&kappas_and_centres).map_err(py_err)? })
    }

    #[getter]
    fn solitons(&self) -> Vec<(f64, f64)> {
        self.inner.solitons.clone()
    }

    fn evolve(&self, t: f64) -> Self {
        Self { inner: self.inner.evolve(t) }
    }

    /// `u = -2 (log det A)''`.
    fn potential(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        glm::reflectionless_potential(&self.inner, &x).map_err(py_err)
    }

    /// `K(x, x)` from the Nyström GLM solve.
    fn glm_diagonal(&self, x: f64) -> PyResult<f64> {
        Ok(glm::glm_solve_nystrom(&self.inner.kernel(), x, &glm::NystromConfig::default()).map_err(py_err)?.diagonal)
    }
}

/// `u = offdiag(q, -conj q)` on the periodic grid `x_j = -X + 2jX/M`.
#[pyclass(skip_from_py_object, module = "soliton_lab", name = "SU2Potential")]
#[derive(Clone)]
struct PySU2Potential {
    inner: zs_akns::SU2Potential,
}

#[pymethods]
impl PySU2Potential {
    #[new]
    fn new(q: Vec<Complex64>, half_width: f64) -> PyResult<Self> {
        Ok(Self { inner: zs_akns::SU2Potential::new(q, half_width).map_err(py_err)? })
    }

    #[getter]
    fn q(&self) -> Vec<Complex64> {
        self.inner.q().to_vec()
    }

    #[getter]
    fn x(&self) -> Vec<f64> {
        self.inner.grid_points()
    }

    /// `Q_0 .. Q_jmax`, each a list of 2×2 matrices over the grid.
    fn recursion(&self, jmax: usize) -> PyResult<Vec<Vec<Matrix>>> {
        let seq = zs_akns::recursion_q(&self.inner, jmax).map_err(py_err)?;
        Ok(seq.q.iter().map(|qk| qk.iter().map(to_nested).collect()).collect())
    }

    fn flow(&self, j: usize) -> PyResult<Vec<Complex64>> {
        zs_akns::nls_flow_rhs(&self.inner, j).map_err(py_err)
    }

    fn hamiltonian(&self, k: usize) -> PyResult<f64> {
        zs_akns::hamiltonian_h(&self.inner, k).map_err(py_err)
    }

    fn poisson_bracket(&self, k: usize, l: usize) -> PyResult<f64> {
        zs_akns::poisson_bracket(&self.inner, k, l).map_err(py_err)
    }

    /// Normalized eigenfunction `m(x, λ)` on the grid plus its endpoint, and the scattering matrix.
    fn compact_scattering(&self, lam: Complex64) -> PyResult<(Vec<Matrix>, Matrix)> {
        let cs = zs_akns::compact_support_scattering(&self.inner, lam).map_err(py_err)?;
        Ok((cs.m.iter().map(to_nested).collect(), to_nested(&cs.s)))
    }

    /// Zeros of `s_11` in `[re_lo, re_hi] × [im_lo, im_hi]`.
    #[pyo3(signature = (rect, grid_n=24))]
    fn zeros(&self, rect: [f64; 4], grid_n: usize) -> PyResult<Vec<Complex64>> {
        zs_akns::locate_zeros_s11(&self.inner, rect, grid_n).map_err(py_err)
    }
}

/// Product of simple factors `I + (z - z̄)/(λ - z) π_v`.
#[pyclass(skip_from_py_object, module = "soliton_lab")]
#[derive(Clone)]
struct RationalLoopElement {
    inner: zs_akns::RationalLoopElement,
}

#[pymethods]
impl RationalLoopElement {
    #[new]
    fn new(poles: Vec<(Complex64, [Complex64; 2])>) -> PyResult<Self> {
        let poles = poles.into_iter().map(|(z, v)| (z, zs_akns::Vec2::new(v[0], v[1]))).collect();
        Ok(Self { inner: zs_akns::RationalLoopElement::new(poles).map_err(py_err)? })
    }

    fn __call__(&self, lam: Complex64) -> PyResult<Matrix> {
        Ok(to_nested(&self.inner.eval(lam).map_err(py_err)?))
    }

    /// `‖g(λ̄)* g(λ) - I‖`.
    fn reality_defect(&self, lam: Complex64) -> PyResult<f64> {
        self.inner.reality_defect(lam).map_err(py_err)
    }

    fn permuted(&self) -> PyResult<Self> {
        Ok(Self { inner: self.inner.permuted_pair().map_err(py_err)? })
    }
}

/// `u_t + 6uu_x + u_xxx = 0` soliton `2a² sech²(a(x - 4a²t - x0))`.
#[pyfunction]
#[pyo3(signature = (a, x, t=0.0, x0=0.0))]
fn kdv_soliton(a: f64, x: f64, t: f64, x0: f64) -> f64 {
    pde::kdv_standard_soliton(a, x, t, x0)
}

/// Two-soliton of `u_t - 6uu_x + u_xxx = 0`.
#[pyfunction]
fn kdv_two_soliton(kappa1: f64, kappa2: f64, x: f64, t: f64) -> PyResult<f64> {
    glm::kdv_two_soliton(kappa1, kappa2, x, t).map_err(py_err)
}

/// One-soliton of the j-th flow obtained by dressing the vacuum.
#[pyfunction]
#[pyo3(signature = (z, b, x, t, j=2))]
fn dressing_one_soliton(z: Complex64, b: Complex64, x: f64, t: f64, j: u32) -> PyResult<Complex64> {
    zs_akns::dressing_one_soliton(z, b, x, t, j).map_err(py_err)
}

/// Field obtained by dressing the vacuum with poles `[(z, [w1, w2]), ...]`.
#[pyfunction]
#[pyo3(signature = (poles, x, t, j=2))]
fn dress_vacuum(poles: Vec<(Complex64, [Complex64; 2])>, x: f64, t: f64, j: u32) -> PyResult<Complex64> {
    let poles: Vec<_> = poles.into_iter().map(|(z, v)| (z, zs_akns::Vec2::new(v[0], v[1]))).collect();
    zs_akns::dress_vacuum(&poles, x, t, j).map_err(py_err)
}

#[pyfunction]
fn nls_soliton(z: Complex64, b: Complex64, x: f64, t: f64) -> Complex64 {
    zs_akns::nls_soliton(z, b, x, t)
}

/// Zero-curvature residual of `lax` ("kdv", "nls", "sge") on samples `q[n][j]` at
/// `(x0 + j dx, n dt)`.
#[pyfunction]
fn zcc_residual(lax: &str, x0: f64, dx: f64, dt: f64, q: Vec<Vec<Complex64>>, lambdas: Vec<Complex64>) -> PyResult<f64> {
    let spec: zs_akns::LaxPairSpec = lax.parse().map_err(py_err)?;
    let traj = zs_akns::ZccTrajectory { x0, dx, dt, q };
    zs_akns::zcc_residual(spec, &traj, &lambdas).map_err(py_err)
}

#[pymodule]
#[pyo3(name = "soliton_lab")]
fn soliton_lab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Lattice>()?;
    m.add_class::<PyField>()?;
    m.add_class::<PyLinePotential>()?;
    m.add_class::<ScatteringData>()?;
    m.add_class::<SolitonSpec>()?;
    m.add_class::<PySU2Potential>()?;
    m.add_class::<RationalLoopElement>()?;
    m.add_function(wrap_pyfunction!(kdv_soliton, m)?)?;
    m.add_function(wrap_pyfunction!(kdv_two_soliton, m)?)?;
    m.add_function(wrap_pyfunction!(dressing_one_soliton, m)?)?;
    m.add_function(wrap_pyfunction!(dress_vacuum, m)?)?;
    m.add_function(wrap_pyfunction!(nls_soliton, m)?)?;
    m.add_function(wrap_pyfunction!(zcc_residual, m)?)?;
    Ok(())
}
