//! Experiment configuration: a JSON file, command-line overrides, and a closed parameter
//! schema per experiment.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use num_complex::Complex64;
use serde::Deserialize;
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Float,
    Int,
    /// Array of numbers, or a comma-separated string.
    List,
    /// `[re, im]`, or the string `"re,im"`.
    Complex,
}

pub struct ParamSpec {
    pub name: &'static str,
    pub kind: Kind,
    /// JSON literal.
    pub default: &'static str,
}

const fn p(name: &'static str, kind: Kind, default: &'static str) -> ParamSpec {
    ParamSpec { name, kind, default }
}

use Kind::*;

const FPU: &[ParamSpec] = &[
    p("n", Int, "32"),
    p("alpha", Float, "0.25"),
    p("mode", Int, "1"),
    p("amplitude", Float, "1.0"),
    p("dt", Float, "0.1"),
    p("periods", Float, "1e5"),
    p("sample_every", Int, "1000"),
    p("recurrence_tol", Float, "0.05"),
    p("high_mode_from", Int, "6"),
    p("equipartition_tol", Float, "0.1"),
];

const ZK: &[ParamSpec] = &[
    p("m", Int, "512"),
    p("dt", Float, "1e-4"),
    p("delta", Float, "0.022"),
    p("t_end", Float, "36.0"),
    p("sample_interval", Float, "0.005"),
    p("prominence", Float, "0.1"),
    p("target_count", Int, "8"),
    p("correlation_tol", Float, "0.95"),
];

const IST: &[ParamSpec] = &[
    p("kappas", List, "[1.0, 2.0]"),
    p("t", Float, "0.0"),
    p("half_width", Float, "20.0"),
    p("m", Int, "4001"),
    p("x_lo", Float, "-8.0"),
    p("x_hi", Float, "8.0"),
    p("dx", Float, "0.05"),
    p("tol", Float, "1e-3"),
];

const COLLISION: &[ParamSpec] = &[
    p("kappa1", Float, "0.5"),
    p("kappa2", Float, "1.0"),
    p("m", Int, "1024"),
    p("length", Float, "80.0"),
    p("dt", Float, "1e-3"),
    p("t_half", Float, "6.0"),
    p("tol", Float, "1e-4"),
];

const HIERARCHY: &[ParamSpec] = &[p("kmax", Int, "3"), p("q_tol", Float, "1e-12"), p("bracket_tol", Float, "1e-6")];

const DRESSING: &[ParamSpec] = &[
    p("z", Complex, "[0.3, 0.8]"),
    p("b", Complex, "[0.4, 0.2]"),
    p("x_lo", Float, "-10.0"),
    p("x_hi", Float, "10.0"),
    p("dx", Float, "0.1"),
    p("times", List, "[-1.0, 0.0, 0.5, 2.0]"),
    p("tol", Float, "1e-10"),
];

pub fn schema(experiment: &str) -> Result<&'static [ParamSpec]> {
    Ok(match experiment {
        "fpu" => FPU,
        "zk" => ZK,
        "ist-roundtrip" => IST,
        "soliton-collision" => COLLISION,
        "hierarchy" => HIERARCHY,
        "dressing" => DRESSING,
        other => bail!("unknown experiment '{other}' (try --list-experiments)"),
    })
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    #[serde(default)]
    pub parameters: Map<String, Value>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn new(experiment: &str) -> Self {
        Self { experiment: experiment.to_string(), parameters: Map::new(), output_dir: default_output_dir(), seed: 0 }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Apply a `name=value` override; the value is read as JSON, falling back to a string.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (name, value) = assignment.split_once('=').ok_or_else(|| anyhow!("override '{assignment}' is not NAME=VALUE"))?;
        let value = serde_json::from_str(value).unwrap_or_else(|_| Value::String(value.to_string()));
        self.parameters.insert(name.trim().to_string(), value);
        Ok(())
    }

    /// Defaults merged with the given parameters, each checked against the schema.
    pub fn resolve(&self) -> Result<Params> {
        let schema = schema(&self.experiment)?;
        if let Some(unknown) = self.parameters.keys().find(|k| !schema.iter().any(|s| s.name == k.as_str())) {
            let known: Vec<&str> = schema.iter().map(|s| s.name).collect();
            bail!("unknown parameter '{unknown}' for {} (known: {})", self.experiment, known.join(", "));
        }
        let mut values = BTreeMap::new();
        for spec in schema {
            let raw = match self.parameters.get(spec.name) {
                Some(v) => v.clone(),
                None => serde_json::from_str(spec.default).expect("schema defaults are valid JSON"),
            };
            let v = normalise(spec, raw).with_context(|| format!("parameter '{}'", spec.name))?;
            values.insert(spec.name.to_string(), v);
        }
        Ok(Params { values })
    }
}

fn numbers(v: &Value) -> Result<Vec<f64>> {
    match v {
        Value::Array(items) => items.iter().map(|x| x.as_f64().ok_or_else(|| anyhow!("'{x}' is not a number"))).collect(),
        Value::String(s) => s
            .split(',')
            .map(|x| x.trim().parse::<f64>().with_context(|| format!("'{x}' is not a number")))
            .collect(),
        Value::Number(n) => Ok(vec![n.as_f64().unwrap_or(f64::NAN)]),
        other => bail!("expected a list of numbers, got {other}"),
    }
}

fn normalise(spec: &ParamSpec, v: Value) -> Result<Value> {
    match spec.kind {
        Kind::Float => {
            let x = match &v {
                Value::String(s) => s.trim().parse::<f64>().ok(),
                _ => v.as_f64(),
            }
            .ok_or_else(|| anyhow!("expected a number, got {v}"))?;
            Ok(Value::from(x))
        }
        Kind::Int => {
            let x = match &v {
                Value::String(s) => s.trim().parse::<u64>().ok(),
                Value::Number(n) => n.as_u64().or_else(|| n.as_f64().filter(|f| f.fract() == 0.0 && *f >= 0.0).map(|f| f as u64)),
                _ => None,
            }
            .ok_or_else(|| anyhow!("expected a non-negative integer, got {v}"))?;
            Ok(Value::from(x))
        }
        Kind::List => Ok(Value::from(numbers(&v)?)),
        Kind::Complex => {
            let xs = numbers(&v)?;
            if xs.len() != 2 {
                bail!("expected [re, im], got {v}");
            }
            Ok(Value::from(xs))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    values: BTreeMap<String, Value>,
}

impl Params {
    fn get(&self, name: &str) -> &Value {
        self.values.get(name).unwrap_or_else(|| panic!("parameter '{name}' is not in the schema"))
    }

    pub fn f64(&self, name: &str) -> f64 {
        self.get(name).as_f64().expect("normalised float")
    }

    pub fn usize(&self, name: &str) -> usize {
        self.get(name).as_u64().expect("normalised integer") as usize
    }

    pub fn list(&self, name: &str) -> Vec<f64> {
        numbers(self.get(name)).expect("normalised list")
    }

    pub fn complex(&self, name: &str) -> Complex64 {
        let v = self.list(name);
        Complex64::new(v[0], v[1])
    }

    pub fn echo(&self) -> Value {
        Value::Object(self.values.iter().map(|(k, v)| (k.clone(), v.clone())).collect())
    }
}
