//! Config-driven experiments and their manifests.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Map, Value};
use soliton_lab::experiments::{self, CollisionOptions, FpuOptions, ZkOptions};

use crate::artifacts::Artifacts;
use crate::config::{ExperimentConfig, Params};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: Option<f64>,
    pub tolerance: f64,
    pub comparison: &'static str,
    pub pass: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value: Some(value), tolerance, comparison: "<=", pass: value <= tolerance }
    }

    fn below(name: &str, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value: Some(value), tolerance, comparison: "<", pass: value < tolerance }
    }

    fn above(name: &str, value: Option<f64>, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance, comparison: ">", pass: value.is_some_and(|v| v > tolerance) }
    }

    fn equals(name: &str, value: Option<f64>, target: f64) -> Self {
        Self { name: name.into(), value, tolerance: target, comparison: "==", pass: value == Some(target) }
    }
}

#[derive(Default)]
struct Outcome {
    checks: Vec<Check>,
    findings: Map<String, Value>,
}

pub struct RunSummary {
    pub manifest: PathBuf,
    pub checks: Vec<Check>,
}

fn grid(lo: f64, hi: f64, h: f64) -> Vec<f64> {
    let n = ((hi - lo) / h).round() as usize;
    (0..=n).map(|i| lo + h * i as f64).collect()
}

fn fpu(p: &Params, dir: &Path, out: &mut Artifacts) -> Result<Outcome> {
    let opts = FpuOptions {
        n: p.usize("n"),
        alpha: p.f64("alpha"),
        mode: p.usize("mode"),
        amplitude: p.f64("amplitude"),
        dt: p.f64("dt"),
        periods: p.f64("periods"),
        sample_every: p.usize("sample_every"),
        recurrence_tol: p.f64("recurrence_tol"),
    };
    let r = experiments::fpu_experiment(&opts).context("fpu")?;
    let modes = r.config.mode_count();
    let mut header = vec!["t".to_string()];
    header.extend((1..=modes).map(|k| format!("H_{k}")));
    header.push("E_total".into());
    let rows: Vec<Vec<f64>> = r
        .spectra
        .iter()
        .zip(&r.total_energy)
        .map(|(s, e)| std::iter::once(s.t).chain(s.energy.iter().copied()).chain(std::iter::once(*e)).collect())
        .collect();
    out.table(&dir.join("fpu_modes.csv"), &header, &rows)?;
    let k0 = p.usize("high_mode_from").clamp(1, modes);
    let mut o = Outcome::default();
    o.checks.push(Check::below("max_{k>=k0} <H_k> / H_1(0)", r.high_mode_share(k0), p.f64("equipartition_tol")));
    o.checks.push(match &r.recurrence {
        Some(rec) => Check::at_most("recurrence |H_1 - H_1(0)| / H_1(0)", rec.deviation, opts.recurrence_tol),
        None => Check { name: "recurrence |H_1 - H_1(0)| / H_1(0)".into(), value: None, tolerance: opts.recurrence_tol, comparison: "<=", pass: false },
    });
    o.findings.insert("recurrence_time".into(), json!(r.recurrence.as_ref().map(|x| x.time)));
    o.findings.insert("energy_drift".into(), json!(r.energy_drift()));
    o.findings.insert("time_averages".into(), json!(r.time_averages));
    Ok(o)
}

fn zk(p: &Params, dir: &Path, out: &mut Artifacts) -> Result<Outcome> {
    let opts = ZkOptions {
        m: p.usize("m"),
        dt: p.f64("dt"),
        delta: p.f64("delta"),
        t_end: p.f64("t_end"),
        sample_interval: p.f64("sample_interval"),
        prominence: p.f64("prominence"),
    };
    let r = experiments::zk_experiment(&opts).context("zk")?;
    let tb = r.breaking_time;
    let rows: Vec<Vec<f64>> = r.samples.iter().map(|s| vec![s.t, s.t / tb, s.count as f64, s.correlation]).collect();
    out.table(&dir.join("zk_series.csv"), &["t", "t_over_tb", "count", "correlation"], &rows)?;
    let f = &r.final_field;
    let rows: Vec<Vec<f64>> = f.grid_points().iter().zip(&f.values).map(|(&x, v)| vec![x, v.re]).collect();
    out.table(&dir.join("zk_final.csv"), &["x", "u"], &rows)?;
    let max = r.max_count(1.0, 4.0);
    let best = r.best_correlation(25.0, 36.0);
    let mut o = Outcome::default();
    o.checks.push(Check::equals("max soliton count in (T_B, 4 T_B]", max.map(|m| m.0 as f64), p.usize("target_count") as f64));
    o.checks.push(Check::above("best correlation in [25 T_B, 36 T_B]", best.map(|b| b.0), p.f64("correlation_tol")));
    o.findings.insert("breaking_time".into(), json!(tb));
    o.findings.insert("max_count".into(), json!(max.map(|m| json!({"count": m.0, "t": m.1}))));
    o.findings.insert("best_correlation".into(), json!(best.map(|b| json!({"correlation": b.0, "t": b.1}))));
    Ok(o)
}

fn ist_roundtrip(p: &Params, dir: &Path, out: &mut Artifacts) -> Result<Outcome> {
    let xs = grid(p.f64("x_lo"), p.f64("x_hi"), p.f64("dx"));
    let r = experiments::ist_roundtrip(&p.list("kappas"), p.f64("t"), p.f64("half_width"), p.usize("m"), &xs).context("ist-roundtrip")?;
    let rows: Vec<Vec<f64>> = (0..r.x.len()).map(|i| vec![r.x[i], r.input[i], r.reconstructed[i]]).collect();
    out.table(&dir.join("ist_roundtrip.csv"), &["x", "input", "reconstructed"], &rows)?;
    let mut o = Outcome::default();
    o.checks.push(Check::at_most("sup |u_in - u_GLM|", r.sup_error, p.f64("tol")));
    o.findings.insert("recovered".into(), json!(r.recovered.iter().map(|b| json!({"kappa": b.0, "c": b.1})).collect::<Vec<_>>()));
    o.findings.insert("max_reflection".into(), json!(r.max_reflection));
    Ok(o)
}

fn collision(p: &Params, dir: &Path, out: &mut Artifacts) -> Result<Outcome> {
    let opts = CollisionOptions {
        kappas: (p.f64("kappa1"), p.f64("kappa2")),
        m: p.usize("m"),
        length: p.f64("length"),
        dt: p.f64("dt"),
        t_half: p.f64("t_half"),
    };
    let r = experiments::soliton_collision(&opts).context("soliton-collision")?;
    let rows: Vec<Vec<f64>> =
        (0..r.initial.len()).map(|j| vec![r.initial.x(j), r.initial.values[j].re, r.final_field.values[j].re]).collect();
    out.table(&dir.join("collision.csv"), &["x", "initial", "final"], &rows)?;
    let mut o = Outcome::default();
    o.checks.push(Check::equals("outgoing pulse count", Some(r.outgoing.len() as f64), r.incoming.len() as f64));
    let change = r.incoming.iter().zip(&r.outgoing).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    o.checks.push(Check::at_most("max |height_in - height_out|", change, p.f64("tol")));
    o.findings.insert("incoming".into(), json!(r.incoming));
    o.findings.insert("outgoing".into(), json!(r.outgoing));
    o.findings.insert("expected".into(), json!(r.expected));
    o.findings.insert("final_error".into(), json!(r.final_error));
    Ok(o)
}

fn hierarchy(p: &Params, seed: u64, dir: &Path, out: &mut Artifacts) -> Result<Outcome> {
    let kmax = p.usize("kmax");
    let r = experiments::hierarchy_experiment(seed, kmax).context("hierarchy")?;
    let rows: Vec<Vec<f64>> = r.hamiltonians.iter().enumerate().map(|(k, h)| vec![k as f64, *h]).collect();
    out.table(&dir.join("hamiltonians.csv"), &["k", "H_k"], &rows)?;
    let mut rows = Vec::new();
    for k in 0..=kmax {
        for l in 0..=kmax {
            rows.push(vec![k as f64, l as f64, r.brackets[k][l], r.scales[k][l]]);
        }
    }
    out.table(&dir.join("brackets.csv"), &["k", "l", "bracket", "scale"], &rows)?;
    let q_tol = p.f64("q_tol");
    let mut o = Outcome::default();
    o.checks.push(Check::at_most("max |Q_1 - u|", r.q1_error, q_tol));
    o.checks.push(Check::at_most("max |Q_2 - closed form|", r.q2_error, q_tol));
    o.checks.push(Check::at_most("max |{H_k, H_l}| / scale", r.max_relative_bracket, p.f64("bracket_tol")));
    o.findings.insert("max_drift".into(), json!(r.max_drift));
    Ok(o)
}

fn dressing(p: &Params, dir: &Path, out: &mut Artifacts) -> Result<Outcome> {
    let xs = grid(p.f64("x_lo"), p.f64("x_hi"), p.f64("dx"));
    let r = experiments::dressing_experiment(p.complex("z"), p.complex("b"), &xs, &p.list("times")).context("dressing")?;
    let mut rows = Vec::new();
    for (t, row) in r.t.iter().zip(&r.q) {
        rows.extend(r.x.iter().zip(row).map(|(x, q)| vec![*t, *x, q.re, q.im]));
    }
    out.table(&dir.join("dressing.csv"), &["t", "x", "re", "im"], &rows)?;
    let mut o = Outcome::default();
    o.checks.push(Check::at_most("max |q_dressing - q_closed_form|", r.closed_form_error, p.f64("tol")));
    o.findings.insert("literal_form_error".into(), json!(r.literal_form_error));
    Ok(o)
}

/// Run one experiment and write its artifacts plus `manifest.json` into the output directory.
pub fn run(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let params = cfg.resolve().context("config")?;
    let dir = cfg.output_dir.as_path();
    let mut out = Artifacts::default();
    let outcome = match cfg.experiment.as_str() {
        "fpu" => fpu(&params, dir, &mut out),
        "zk" => zk(&params, dir, &mut out),
        "ist-roundtrip" => ist_roundtrip(&params, dir, &mut out),
        "soliton-collision" => collision(&params, dir, &mut out),
        "hierarchy" => hierarchy(&params, cfg.seed, dir, &mut out),
        "dressing" => dressing(&params, dir, &mut out),
        other => unreachable!("schema accepted unknown experiment {other}"),
    }?;
    let manifest_path = dir.join("manifest.json");
    let mut files: Vec<String> = out.files().iter().map(|f| relative(f, dir)).collect();
    files.push("manifest.json".into());
    let manifest = json!({
        "experiment": cfg.experiment,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cfg.seed,
        "parameters": params.echo(),
        "files": files,
        "checks": outcome.checks,
        "findings": outcome.findings,
        "pass": outcome.checks.iter().all(|c| c.pass),
    });
    out.json(&manifest_path, &manifest)?;
    out.commit()?;
    Ok(RunSummary { manifest: manifest_path, checks: outcome.checks })
}

fn relative(path: &Path, dir: &Path) -> String {
    path.strip_prefix(dir).unwrap_or(path).to_string_lossy().into_owned()
}
