//! The direct subcommands: one module operation per invocation, flags only.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Value};
use soliton_lab::experiments;
use soliton_lab::fpu::{self, LatticeConfig, LatticeState};
use soliton_lab::glm::{self, GlmKernel, IstOptions, NystromConfig, SolitonSpecKdV};
use soliton_lab::pde::{self, Equation, PeriodicField, SplitStepConfig, SplitStepSolver};
use soliton_lab::scattering::{self, LinePotential, ScatteringData};
use soliton_lab::zs_akns::{self, LaxPairSpec, SU2Potential, ZccTrajectory};

use crate::artifacts::{complex, matrix, number, Artifacts};

pub fn parse_complex(s: &str) -> Result<Complex64> {
    let parts: Vec<&str> = s.split(',').collect();
    match parts.as_slice() {
        [re, im] => Ok(Complex64::new(re.trim().parse()?, im.trim().parse()?)),
        [re] => Ok(Complex64::new(re.trim().parse()?, 0.0)),
        _ => bail!("expected 're,im', got '{s}'"),
    }
}

fn parse_range(s: &str) -> Result<(f64, f64)> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| anyhow!("expected 'lo:hi', got '{s}'"))?;
    let (lo, hi): (f64, f64) = (lo.trim().parse()?, hi.trim().parse()?);
    if !(hi > lo) {
        bail!("empty range '{s}'");
    }
    Ok((lo, hi))
}

fn grid(lo: f64, hi: f64, h: f64) -> Result<Vec<f64>> {
    if !(h > 0.0) {
        bail!("spacing must be positive, got {h}");
    }
    let n = ((hi - lo) / h).round() as usize;
    Ok((0..=n).map(|i| lo + h * i as f64).collect())
}

/// One sample per line, `re` or `re,im`; blank lines and `#` comments are skipped.
fn read_samples(path: &Path) -> Result<Vec<Complex64>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| parse_complex(l).with_context(|| format!("{}: bad sample '{l}'", path.display())))
        .collect()
}

fn scattering_json(sd: &ScatteringData) -> Value {
    let spectrum = |v: &[(f64, Complex64)]| -> Vec<Value> { v.iter().map(|(k, r)| json!({"k": k, "re": r.re, "im": r.im})).collect() };
    json!({
        "bound": sd.bound.iter().map(|(k, c)| json!({"kappa": k, "c": c})).collect::<Vec<_>>(),
        "reflection": spectrum(&sd.reflection),
        "transmission": spectrum(&sd.transmission),
    })
}

#[derive(Debug, Args)]
pub struct FpuArgs {
    #[arg(long, default_value_t = 32)]
    n: usize,
    #[arg(long, default_value_t = 0.25)]
    alpha: f64,
    #[arg(long, default_value_t = 0.1)]
    dt: f64,
    #[arg(long, default_value_t = 1000.0)]
    t_end: f64,
    #[arg(long, default_value_t = 100)]
    sample_every: usize,
    /// Initial normal mode.
    #[arg(long, default_value_t = 1)]
    mode: usize,
    #[arg(long, default_value_t = 1.0)]
    amplitude: f64,
    #[arg(long, default_value = "fpu.csv")]
    out: PathBuf,
}

pub fn fpu(a: &FpuArgs) -> Result<Vec<PathBuf>> {
    if a.sample_every == 0 {
        bail!("--sample-every must be at least 1");
    }
    let cfg = LatticeConfig::new(a.n, a.alpha, 1.0, 1.0).context("lattice")?;
    let mut state = LatticeState::from_mode(&cfg, a.mode, a.amplitude).context("initial state")?;
    let mut out = Artifacts::default();
    let mut header = vec!["t".to_string()];
    header.extend((1..=cfg.mode_count()).map(|k| format!("H_{k}")));
    header.push("E_total".into());
    let mut sink = out.csv(&a.out, &header)?;
    let steps = (a.t_end / a.dt).round() as usize;
    let mut done = 0;
    loop {
        let spec = fpu::mode_energies(&state, &cfg)?;
        let mut row = vec![state.t];
        row.extend(&spec.energy);
        row.push(fpu::total_energy(&state, &cfg)?);
        sink.row(&row)?;
        if done >= steps {
            break;
        }
        let chunk = a.sample_every.min(steps - done);
        fpu::advance(&mut state, a.dt, chunk, &cfg).context("fpu integration")?;
        done += chunk;
        state.t = a.dt * done as f64;
    }
    sink.finish()?;
    out.commit()
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EquationArg {
    KdvZk,
    Kdv,
    Burgers,
    Nls,
}

impl From<EquationArg> for Equation {
    fn from(e: EquationArg) -> Self {
        match e {
            EquationArg::KdvZk => Equation::KdvZk,
            EquationArg::Kdv => Equation::KdvStandard,
            EquationArg::Burgers => Equation::Burgers,
            EquationArg::Nls => Equation::Nls,
        }
    }
}

#[derive(Debug, Args)]
pub struct PdeArgs {
    #[arg(long, value_enum, default_value = "kdv-zk")]
    equation: EquationArg,
    /// Dispersion coefficient of the kdv-zk form.
    #[arg(long, default_value_t = 0.022)]
    delta: f64,
    #[arg(long, default_value_t = 512)]
    m: usize,
    /// Box length; defaults to 2 for `cos` and file data, 40 for `soliton`.
    #[arg(long)]
    length: Option<f64>,
    #[arg(long, default_value_t = 1e-4)]
    dt: f64,
    #[arg(long, default_value_t = 0.1)]
    t_end: f64,
    #[arg(long, default_value_t = 100)]
    sample_every: usize,
    /// `cos` (cos πx on [0, L)), `soliton:a` (peak height a, centred in [-L/2, L/2)), or
    /// `file:PATH` (one `re` or `re,im` sample per line on [0, L)).
    #[arg(long, default_value = "cos", allow_hyphen_values = true)]
    init: String,
    /// CSV of samples; a JSON sidecar with conserved quantities is written next to it.
    #[arg(long, default_value = "pde.csv")]
    out: PathBuf,
}

fn initial_field(a: &PdeArgs, eq: Equation) -> Result<PeriodicField> {
    if let Some(height) = a.init.strip_prefix("soliton:") {
        let h: f64 = height.parse().with_context(|| format!("bad soliton height '{height}'"))?;
        if !(h > 0.0) {
            bail!("soliton height must be positive");
        }
        let length = a.length.unwrap_or(40.0);
        let m = a.m;
        let d2 = a.delta * a.delta;
        return Ok(match eq {
            Equation::Nls => PeriodicField::sample_complex(m, length, -0.5 * length, |x| Complex64::from(h / (h * x).cosh())),
            // u = 3c sech²(√c x / 2δ) with peak 3c.
            Equation::KdvZk if d2 > 0.0 => {
                let c = h / 3.0;
                PeriodicField::sample_real(m, length, -0.5 * length, |x| h / (c.sqrt() * x / (2.0 * a.delta)).cosh().powi(2))
            }
            _ => PeriodicField::sample_real(m, length, -0.5 * length, |x| pde::kdv_standard_soliton((h / 2.0).sqrt(), x, 0.0, 0.0)),
        });
    }
    let length = a.length.unwrap_or(2.0);
    if a.init == "cos" {
        return Ok(PeriodicField::sample_real(a.m, length, 0.0, |x| (PI * x).cos()));
    }
    if let Some(path) = a.init.strip_prefix("file:") {
        let samples = read_samples(Path::new(path))?;
        let mut f = PeriodicField::from_complex(samples, length);
        if !eq.is_complex() {
            f.values.iter_mut().for_each(|v| v.im = 0.0);
        }
        return Ok(f);
    }
    bail!("unknown --init '{}' (cos, soliton:a, file:PATH)", a.init)
}

pub fn pde_run(a: &PdeArgs) -> Result<Vec<PathBuf>> {
    if a.sample_every == 0 {
        bail!("--sample-every must be at least 1");
    }
    let eq: Equation = a.equation.into();
    let mut field = initial_field(a, eq).context("initial field")?;
    let mut cfg = SplitStepConfig::new(eq, a.dt);
    cfg.delta2 = a.delta * a.delta;
    let mut solver = SplitStepSolver::for_field(&field, cfg).context("solver")?;
    let grid = solver.grid().clone();
    let mut out = Artifacts::default();
    let xs = field.grid_points();
    let mut header = vec!["t".to_string()];
    if eq.is_complex() {
        header.extend(xs.iter().map(|x| format!("re@{}", number(*x))));
        header.extend(xs.iter().map(|x| format!("im@{}", number(*x))));
    } else {
        header.extend(xs.iter().map(|x| number(*x)));
    }
    let mut sink = out.csv(&a.out, &header)?;
    let (mut ts, mut mass, mut l2, mut energy) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let steps = (a.t_end / a.dt).round() as usize;
    let mut done = 0;
    loop {
        let mut row = vec![field.t];
        row.extend(field.values.iter().map(|v| v.re));
        if eq.is_complex() {
            row.extend(field.values.iter().map(|v| v.im));
        }
        sink.row(&row)?;
        ts.push(field.t);
        let re: Vec<f64> = field.values.iter().map(|v| v.re).collect();
        let sq: Vec<f64> = field.values.iter().map(|v| v.norm_sqr()).collect();
        mass.push(grid.integrate(&re));
        l2.push(grid.integrate(&sq));
        if eq == Equation::KdvStandard {
            energy.push(pde::kdv_conserved(&field)?.2);
        }
        if done >= steps {
            break;
        }
        let chunk = a.sample_every.min(steps - done);
        solver.advance(&mut field, chunk).context("split-step integration")?;
        done += chunk;
        field.t = a.dt * done as f64;
    }
    sink.finish()?;
    let mut conserved = json!({ "t": ts, "integral_u": mass, "integral_abs_u_squared": l2 });
    if eq == Equation::KdvStandard {
        conserved["hamiltonian"] = json!(energy);
    }
    if eq.is_complex() {
        conserved.as_object_mut().expect("object").remove("integral_u");
    }
    let sidecar = a.out.with_extension("json");
    out.json(&sidecar, &json!({ "equation": eq.name(), "m": a.m, "dt": a.dt, "conserved": conserved }))?;
    out.commit()
}

#[derive(Debug, Args)]
pub struct ScatterArgs {
    /// `soliton:κ1,κ2,...` (reflectionless, centred) or `file:PATH` (one sample per line on
    /// [-x_max, x_max]).
    #[arg(long, default_value = "soliton:1,2", allow_hyphen_values = true)]
    potential: String,
    #[arg(long, default_value_t = 20.0)]
    x_max: f64,
    /// Sample count for `soliton:` potentials.
    #[arg(long, default_value_t = 4001)]
    m: usize,
    /// Evolve the scattering data to this time.
    #[arg(long, default_value_t = 0.0)]
    t: f64,
    #[arg(long, default_value = "scatter.json")]
    out: PathBuf,
}

fn kappa_list(s: &str) -> Result<Vec<f64>> {
    s.split(',').map(|k| k.trim().parse::<f64>().with_context(|| format!("bad κ '{k}'"))).collect()
}

fn line_potential(spec: &str, x_max: f64, m: usize) -> Result<LinePotential> {
    if let Some(ks) = spec.strip_prefix("soliton:") {
        let kappas = kappa_list(ks)?;
        let s = SolitonSpecKdV::centred(&kappas.iter().map(|&k| (k, 0.0)).collect::<Vec<_>>())?;
        let xs = grid(-x_max, x_max, 2.0 * x_max / (m - 1).max(1) as f64)?;
        return Ok(LinePotential::new(glm::reflectionless_potential(&s, &xs)?, x_max)?);
    }
    if let Some(path) = spec.strip_prefix("file:") {
        let u: Vec<f64> = read_samples(Path::new(path))?.iter().map(|z| z.re).collect();
        return Ok(LinePotential::new(u, x_max)?);
    }
    bail!("unknown potential '{spec}' (soliton:κ1,κ2,... or file:PATH)")
}

pub fn scatter(a: &ScatterArgs) -> Result<Vec<PathBuf>> {
    let u = line_potential(&a.potential, a.x_max, a.m).context("potential")?;
    let sd = scattering::scattering_data(&u, &scattering::default_k_grid()).context("direct scattering")?;
    let sd = scattering::evolve_scattering_data(&sd, a.t);
    let mut v = scattering_json(&sd);
    v["t"] = json!(a.t);
    let mut out = Artifacts::default();
    out.json(&a.out, &v)?;
    out.commit()
}

#[derive(Debug, Args)]
pub struct IstArgs {
    /// `soliton:κ,c;κ,c` (bound-state data) or `file:PATH` (potential samples on [-x_max, x_max]).
    #[arg(long, default_value = "soliton:1,1.4142135623730951;2,2", allow_hyphen_values = true)]
    input: String,
    #[arg(long, default_value_t = 0.0)]
    t: f64,
    #[arg(long, default_value = "-10:10", allow_hyphen_values = true)]
    x_range: String,
    /// Output spacing. u is a finite difference of K(x, x) on this grid, so keep it small.
    #[arg(long, default_value_t = 0.05)]
    dx: f64,
    #[arg(long, default_value_t = 20.0)]
    x_max: f64,
    #[arg(long, default_value = "ist.csv")]
    out: PathBuf,
    /// Also write the scattering data at each stage as JSON.
    #[arg(long)]
    trace: Option<PathBuf>,
}

pub fn ist(a: &IstArgs) -> Result<Vec<PathBuf>> {
    let (lo, hi) = parse_range(&a.x_range)?;
    let xs = grid(lo, hi, a.dx)?;
    let (initial, evolved, u) = if let Some(data) = a.input.strip_prefix("soliton:") {
        let bound = data
            .split(';')
            .map(|pair| {
                let (k, c) = pair.split_once(',').ok_or_else(|| anyhow!("expected 'κ,c', got '{pair}'"))?;
                Ok((k.trim().parse::<f64>()?, c.trim().parse::<f64>()?))
            })
            .collect::<Result<Vec<_>>>()?;
        SolitonSpecKdV::new(bound.clone()).context("bound-state data")?;
        let sd = ScatteringData::reflectionless(bound);
        let ev = scattering::evolve_scattering_data(&sd, a.t);
        let u = glm::glm_potential(&GlmKernel::from_scattering(&ev), &xs, &NystromConfig::default()).context("GLM inversion")?;
        (sd, ev, u)
    } else if let Some(path) = a.input.strip_prefix("file:") {
        let u0: Vec<f64> = read_samples(Path::new(path))?.iter().map(|z| z.re).collect();
        let u0 = LinePotential::new(u0, a.x_max).context("potential")?;
        let trace = glm::ist_solve(&u0, a.t, &xs, &IstOptions::default()).context("inverse scattering")?;
        (trace.initial, trace.evolved, trace.u)
    } else {
        bail!("unknown --input '{}' (soliton:κ,c;κ,c or file:PATH)", a.input);
    };
    let mut out = Artifacts::default();
    let rows: Vec<Vec<f64>> = xs.iter().zip(&u).map(|(x, v)| vec![*x, *v]).collect();
    out.table(&a.out, &["x", "u"], &rows)?;
    if let Some(path) = &a.trace {
        out.json(path, &json!({ "t": a.t, "initial": scattering_json(&initial), "evolved": scattering_json(&evolved) }))?;
    }
    out.commit()
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AknsOp {
    Recursion,
    Zcc,
    Dress,
    Scatter,
}

#[derive(Debug, Args)]
pub struct AknsArgs {
    #[arg(long, value_enum)]
    op: AknsOp,
    /// Lax pair for `zcc`: kdv, nls or sge.
    #[arg(long, default_value = "nls")]
    lax: String,
    /// Perturbation size added to the exact solution in `zcc`.
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
    /// Random potential seed for `recursion`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    jmax: usize,
    #[arg(long, default_value_t = 512)]
    m: usize,
    #[arg(long, default_value_t = 16.0)]
    x_max: f64,
    /// Pole for `dress`.
    #[arg(long, default_value = "0.3,0.8", allow_hyphen_values = true)]
    z: String,
    #[arg(long, default_value = "0.4,0.2", allow_hyphen_values = true)]
    b: String,
    /// Flow index for `dress`.
    #[arg(long, default_value_t = 2)]
    flow: u32,
    #[arg(long, default_value_t = 0.0)]
    t: f64,
    #[arg(long, default_value = "-10:10", allow_hyphen_values = true)]
    x_range: String,
    #[arg(long, default_value_t = 0.1)]
    dx: f64,
    /// Spectral parameter for `scatter`.
    #[arg(long, default_value = "0.5,0.7", allow_hyphen_values = true)]
    lambda: String,
    /// Amplitude and half-width of the compact bump used by `scatter`.
    #[arg(long, default_value = "0.8,0.3", allow_hyphen_values = true)]
    amplitude: String,
    #[arg(long, default_value_t = 2.5)]
    width: f64,
    #[arg(long, default_value = "akns.json")]
    out: PathBuf,
}

fn zcc_solution(spec: LaxPairSpec, x: f64, t: f64) -> Complex64 {
    match spec {
        LaxPairSpec::KdvAkns => Complex64::from(pde::kdv_standard_soliton(0.8, x, t / 4.0, 0.0)),
        LaxPairSpec::NlsZs => zs_akns::nls_soliton(Complex64::new(0.3, 0.8), Complex64::new(0.4, 0.2), x, t),
        LaxPairSpec::SgeAkns => Complex64::from(4.0 * (1.3 * x + t / 1.3).exp().atan()),
    }
}

pub fn akns(a: &AknsArgs) -> Result<Vec<PathBuf>> {
    let value = match a.op {
        AknsOp::Recursion => {
            let pot = experiments::random_su2_potential(a.seed, a.m, a.x_max).context("potential")?;
            let seq = zs_akns::recursion_q(&pot, a.jmax).context("recursion")?;
            let hamiltonians: Vec<f64> = (0..=a.jmax.saturating_sub(2)).filter_map(|k| seq.hamiltonian(k).ok()).collect();
            json!({
                "op": "recursion",
                "seed": a.seed,
                "x": pot.grid_points(),
                "q": pot.q().iter().map(|z| complex(*z)).collect::<Vec<_>>(),
                "Q": seq.q.iter().map(|qk| qk.iter().map(matrix).collect::<Vec<_>>()).collect::<Vec<_>>(),
                "hamiltonians": hamiltonians,
                "drift": seq.drift,
            })
        }
        AknsOp::Zcc => {
            let spec: LaxPairSpec = a.lax.parse()?;
            let bump = |x: f64| Complex64::new(1.0, 0.5) * (-x * x).exp();
            let real = !matches!(spec, LaxPairSpec::NlsZs);
            let eps = a.eps;
            let traj = ZccTrajectory::sample(-8.0, 0.02, 801, 0.1, 1e-3, 7, move |x, t| {
                let p = eps * t * bump(x);
                zcc_solution(spec, x, t) + if real { Complex64::from(p.re) } else { p }
            });
            let lambdas = [Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(2.0, 0.0)];
            let r = zs_akns::zcc_residual(spec, &traj, &lambdas).context("zero-curvature residual")?;
            json!({ "op": "zcc", "lax": a.lax, "eps": a.eps, "lambdas": lambdas.iter().map(|l| complex(*l)).collect::<Vec<_>>(), "residual": r })
        }
        AknsOp::Dress => {
            let (z, b) = (parse_complex(&a.z)?, parse_complex(&a.b)?);
            let (lo, hi) = parse_range(&a.x_range)?;
            let xs = grid(lo, hi, a.dx)?;
            let q: Vec<Value> = xs
                .iter()
                .map(|&x| zs_akns::dressing_one_soliton(z, b, x, a.t, a.flow).map(complex))
                .collect::<soliton_lab::Result<_>>()
                .context("dressing")?;
            json!({ "op": "dress", "z": complex(z), "b": complex(b), "flow": a.flow, "t": a.t, "x": xs, "q": q })
        }
        AknsOp::Scatter => {
            let (lambda, amp, w) = (parse_complex(&a.lambda)?, parse_complex(&a.amplitude)?, a.width);
            let pot = SU2Potential::sample(a.m, a.x_max, |x| {
                let y = x / w;
                if y.abs() < 1.0 {
                    amp * (1.0 - 1.0 / (1.0 - y * y)).exp()
                } else {
                    Complex64::from(0.0)
                }
            })
            .context("potential")?;
            let cs = zs_akns::compact_support_scattering(&pot, lambda).context("compact-support scattering")?;
            let mut x = pot.grid_points();
            x.push(a.x_max);
            json!({
                "op": "scatter",
                "lambda": complex(lambda),
                "s": matrix(&cs.s),
                "s_diag": complex(cs.s_diag),
                "normalization_defect": cs.normalization_defect,
                "sup_norm": cs.sup_norm,
                "x": x,
                "m": cs.m.iter().map(matrix).collect::<Vec<_>>(),
            })
        }
    };
    let mut out = Artifacts::default();
    out.json(&a.out, &value)?;
    out.commit()
}
