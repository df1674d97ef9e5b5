//! Model files, solution files, and deterministic JSON output.
//!
//! # Model files
//!
//! ```json
//! {
//!   "dimension": 1,
//!   "horizon_r": 1.0,
//!   "period": 1.0,
//!   "A": {"constant": [[[-1.0, 0.0]]]},
//!   "delays": [{"tau": 1.0, "B": {"constant": [[[-0.5, 0.0]]]}}],
//!   "kernel": {"order": 32, "terms": [{"harmonic": 0, "theta_power": 1, "matrix": [[[0.1, 0.0]]]}]},
//!   "forcing": {"dimension": 1, "terms": [{"frequency": 1.0, "re": [1.0], "im": [0.0]}]}
//! }
//! ```
//!
//! Matrices are row-major: either a list of rows of `[re, im]` pairs or one
//! flat list of `n * n` pairs. A coefficient may be `{"constant": M}`,
//! `{"fourier_terms": [{"harmonic": k, "matrix": M}, ...]}` meaning
//! `sum_k M_k exp(2 pi i k t)`, or a bare matrix. `period`, `A`, `delays`,
//! `kernel` and `forcing` are optional; the kernel is
//! `sum M exp(2 pi i k t) theta^p`.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::apfun::TrigPolynomial;
use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec};
use crate::phasespace::{ChebGrid, FdeModel, KernelFn, MatrixFn, Segment};
use crate::propagator::StepperConfig;
use crate::solver::ApSolution;

/// Float rendering with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Rows(Vec<Vec<[f64; 2]>>),
    Flat(Vec<[f64; 2]>),
}

impl MatrixSpec {
    fn to_matrix(&self, n: usize) -> Result<CMat> {
        let flat: Vec<[f64; 2]> = match self {
            MatrixSpec::Rows(rows) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(Error::Parse(format!("matrix must be {n} x {n}")));
                }
                rows.iter().flatten().copied().collect()
            }
            MatrixSpec::Flat(v) => v.clone(),
        };
        if flat.len() != n * n {
            return Err(Error::Parse(format!(
                "matrix has {} entries, expected {}",
                flat.len(),
                n * n
            )));
        }
        Ok(CMat::from_row_iterator(
            n,
            n,
            flat.iter().map(|p| Complex64::new(p[0], p[1])),
        ))
    }

    fn from_matrix(m: &CMat) -> Self {
        MatrixSpec::Rows(
            m.row_iter()
                .map(|r| r.iter().map(|z| [z.re, z.im]).collect())
                .collect(),
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierTermSpec {
    pub harmonic: i32,
    pub matrix: MatrixSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoefficientSpec {
    Constant { constant: MatrixSpec },
    Fourier { fourier_terms: Vec<FourierTermSpec> },
    Bare(MatrixSpec),
}

impl CoefficientSpec {
    fn to_matrix_fn(&self, n: usize) -> Result<MatrixFn> {
        Ok(match self {
            CoefficientSpec::Constant { constant } | CoefficientSpec::Bare(constant) => {
                MatrixFn::Constant(constant.to_matrix(n)?)
            }
            CoefficientSpec::Fourier { fourier_terms } => {
                if fourier_terms.is_empty() {
                    return Err(Error::Parse("fourier_terms must not be empty".into()));
                }
                MatrixFn::Fourier(
                    fourier_terms
                        .iter()
                        .map(|t| Ok((t.harmonic, t.matrix.to_matrix(n)?)))
                        .collect::<Result<_>>()?,
                )
            }
        })
    }

    fn from_matrix_fn(m: &MatrixFn) -> Result<Self> {
        Ok(match m {
            MatrixFn::Constant(c) => CoefficientSpec::Constant {
                constant: MatrixSpec::from_matrix(c),
            },
            MatrixFn::Fourier(terms) => CoefficientSpec::Fourier {
                fourier_terms: terms
                    .iter()
                    .map(|(k, c)| FourierTermSpec {
                        harmonic: *k,
                        matrix: MatrixSpec::from_matrix(c),
                    })
                    .collect(),
            },
            MatrixFn::Closure { .. } => {
                return Err(Error::Domain(
                    "closure coefficients cannot be written to a model file".into(),
                ))
            }
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DelaySpec {
    pub tau: f64,
    #[serde(rename = "B")]
    pub b: CoefficientSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelTermSpec {
    pub harmonic: i32,
    pub theta_power: u32,
    pub matrix: MatrixSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    pub terms: Vec<KernelTermSpec>,
}

/// The model file document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub dimension: usize,
    pub horizon_r: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<CoefficientSpec>,
    #[serde(default)]
    pub delays: Vec<DelaySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forcing: Option<TrigPolynomial>,
}

impl ModelFile {
    pub fn build(&self) -> Result<FdeModel> {
        let n = self.dimension;
        if n == 0 {
            return Err(Error::Parse("dimension must be positive".into()));
        }
        let mut b = FdeModel::builder(n, self.horizon_r);
        if let Some(p) = self.period {
            b = b.period(p);
        }
        if let Some(a) = &self.a {
            b = b.state(a.to_matrix_fn(n)?);
        }
        for d in &self.delays {
            b = b.delay(d.tau, d.b.to_matrix_fn(n)?);
        }
        if let Some(k) = &self.kernel {
            if k.terms.is_empty() {
                return Err(Error::Parse("kernel needs at least one term".into()));
            }
            let terms = k
                .terms
                .iter()
                .map(|t| Ok((t.harmonic, t.theta_power, t.matrix.to_matrix(n)?)))
                .collect::<Result<Vec<_>>>()?;
            b = b.kernel(KernelFn::Terms(terms), k.order);
        }
        if let Some(f) = &self.forcing {
            b = b.forcing(f.clone());
        }
        b.build()
    }

    /// Model file for a model built from constant or Fourier coefficients.
    pub fn from_model(model: &FdeModel) -> Result<Self> {
        let kernel = match &model.delays().distributed {
            None => None,
            Some(k) => match &k.kernel {
                KernelFn::Terms(terms) => Some(KernelSpec {
                    order: Some(k.order),
                    terms: terms
                        .iter()
                        .map(|(h, p, m)| KernelTermSpec {
                            harmonic: *h,
                            theta_power: *p,
                            matrix: MatrixSpec::from_matrix(m),
                        })
                        .collect(),
                }),
                KernelFn::Closure { .. } => {
                    return Err(Error::Domain(
                        "closure kernels cannot be written to a model file".into(),
                    ))
                }
            },
        };
        Ok(ModelFile {
            dimension: model.dim(),
            horizon_r: model.horizon(),
            period: None,
            a: Some(CoefficientSpec::from_matrix_fn(model.state())?),
            delays: model
                .delays()
                .discrete
                .iter()
                .map(|d| {
                    Ok(DelaySpec {
                        tau: d.tau,
                        b: CoefficientSpec::from_matrix_fn(&d.coefficient)?,
                    })
                })
                .collect::<Result<_>>()?,
            kernel,
            forcing: Some(model.forcing().clone()),
        })
    }
}

pub fn parse_model(text: &str) -> Result<FdeModel> {
    let file: ModelFile = serde_json::from_str(text)?;
    file.build()
}

pub fn load_model(path: &Path) -> Result<FdeModel> {
    let text = fs::read_to_string(path)?;
    parse_model(&text)
}

fn pair(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn vec_pairs(v: &CVec) -> Value {
    Value::Array(v.iter().map(|z| pair(*z)).collect())
}

fn read_pairs(v: &Value, n: usize, what: &str) -> Result<CVec> {
    let arr = v
        .as_array()
        .ok_or_else(|| Error::Parse(format!("{what} must be a list of [re, im] pairs")))?;
    if arr.len() != n {
        return Err(Error::Parse(format!(
            "{what} has {} entries, expected {n}",
            arr.len()
        )));
    }
    let mut out = CVec::zeros(n);
    for (i, p) in arr.iter().enumerate() {
        let re = p.get(0).and_then(Value::as_f64);
        let im = p.get(1).and_then(Value::as_f64);
        match (re, im) {
            (Some(re), Some(im)) => out[i] = Complex64::new(re, im),
            _ => return Err(Error::Parse(format!("{what}[{i}] is not an [re, im] pair"))),
        }
    }
    Ok(out)
}

/// Samples per unit time of the trajectory stored with each component.
pub const SOLUTION_SAMPLES: usize = 64;

/// Solution document: per component the frequency, forcing coefficient,
/// initial segment at time 0, and samples of the one-period trajectory.
pub fn solution_to_json(sol: &ApSolution) -> Value {
    let components: Vec<Value> = sol
        .components()
        .iter()
        .map(|c| {
            let grid = c.phi.grid();
            let nodes: Vec<Value> = (0..grid.len())
                .map(|j| vec_pairs(&c.phi.node_value(j)))
                .collect();
            let samples: Vec<Value> = (0..=SOLUTION_SAMPLES)
                .map(|k| {
                    let t = k as f64 / SOLUTION_SAMPLES as f64;
                    json!({"t": t, "u": vec_pairs(&c.trajectory.eval_steps(t))})
                })
                .collect();
            json!({
                "frequency": c.frequency,
                "coefficient": vec_pairs(&c.coefficient),
                "condition_estimate": c.condition_estimate,
                "amplitude": vec_pairs(&c.amplitude()),
                "segment": {
                    "horizon": grid.horizon(),
                    "m": grid.degree(),
                    "nodes": grid.nodes(),
                    "values": nodes,
                },
                "trajectory": samples,
            })
        })
        .collect();
    json!({
        "format": "floquet-ap-solution",
        "version": 1,
        "dimension": sol.model().dim(),
        "model_fingerprint": sol.model().fingerprint(),
        "resolution": {
            "m": sol.components().first().map(|c| c.phi.grid().degree()),
            "substeps": sol.stepper().substeps,
        },
        "classification": sol.report().map(|r| r.classification.as_str()),
        "components": components,
    })
}

/// A solution file read back: the rebuilt solution plus the largest
/// difference between its trajectories and the stored samples.
pub struct LoadedSolution {
    pub solution: ApSolution,
    pub trajectory_mismatch: f64,
    pub fingerprint_matches: bool,
}

pub fn solution_from_json(model: &FdeModel, doc: &Value) -> Result<LoadedSolution> {
    let n = model.dim();
    let get = |v: &Value, k: &str| -> Result<Value> {
        v.get(k)
            .cloned()
            .ok_or_else(|| Error::Parse(format!("missing field {k}")))
    };
    if doc.get("format").and_then(Value::as_str) != Some("floquet-ap-solution") {
        return Err(Error::Parse("not a solution document".into()));
    }
    let substeps = get(&get(doc, "resolution")?, "substeps")?
        .as_u64()
        .ok_or_else(|| Error::Parse("resolution.substeps must be an integer".into()))?
        as usize;
    let fingerprint_matches =
        doc.get("model_fingerprint").and_then(Value::as_str) == Some(model.fingerprint().as_str());
    let comps = get(doc, "components")?;
    let comps = comps
        .as_array()
        .ok_or_else(|| Error::Parse("components must be a list".into()))?;
    let mut parts = Vec::with_capacity(comps.len());
    let mut stored = Vec::with_capacity(comps.len());
    for c in comps {
        let frequency = get(c, "frequency")?
            .as_f64()
            .ok_or_else(|| Error::Parse("frequency must be a number".into()))?;
        let coefficient = read_pairs(&get(c, "coefficient")?, n, "coefficient")?;
        let seg = get(c, "segment")?;
        let horizon = get(&seg, "horizon")?
            .as_f64()
            .ok_or_else(|| Error::Parse("segment.horizon".into()))?;
        let m = get(&seg, "m")?
            .as_u64()
            .ok_or_else(|| Error::Parse("segment.m".into()))? as usize;
        let grid = std::sync::Arc::new(ChebGrid::new(horizon, m)?);
        let values = get(&seg, "values")?;
        let values = values
            .as_array()
            .ok_or_else(|| Error::Parse("segment.values must be a list".into()))?;
        if values.len() != grid.len() {
            return Err(Error::Parse(format!(
                "segment has {} node values, expected {}",
                values.len(),
                grid.len()
            )));
        }
        let mut coords = CVec::zeros(n * grid.len());
        for (j, v) in values.iter().enumerate() {
            coords
                .rows_mut(j * n, n)
                .copy_from(&read_pairs(v, n, "segment value")?);
        }
        let phi = Segment::from_coords(grid, n, coords)?;
        let traj = get(c, "trajectory")?;
        let samples = traj
            .as_array()
            .ok_or_else(|| Error::Parse("trajectory must be a list".into()))?
            .iter()
            .map(|s| {
                let t = get(s, "t")?
                    .as_f64()
                    .ok_or_else(|| Error::Parse("trajectory t".into()))?;
                Ok((t, read_pairs(&get(s, "u")?, n, "trajectory sample")?))
            })
            .collect::<Result<Vec<_>>>()?;
        stored.push(samples);
        parts.push((frequency, coefficient, phi));
    }
    let stepper = StepperConfig::with_substeps(substeps);
    let solution = ApSolution::from_segments(model, parts, &stepper)?;
    let mut trajectory_mismatch = 0.0f64;
    for (comp, samples) in solution.components().iter().zip(&stored) {
        for (t, u) in samples {
            if !(0.0..=1.0).contains(t) {
                return Err(Error::Parse(format!(
                    "trajectory sample time {t} outside [0, 1]"
                )));
            }
            let d = (comp.trajectory.eval_steps(*t) - u)
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            trajectory_mismatch = trajectory_mismatch.max(d);
        }
    }
    Ok(LoadedSolution {
        solution,
        trajectory_mismatch,
        fingerprint_matches,
    })
}

/// Writes a JSON value with sorted keys, two-space indentation, and floats
/// fixed to 17 significant digits.
pub fn to_deterministic_json(v: &Value) -> String {
    let mut out = String::new();
    write_value(v, 0, &mut out);
    out.push('\n');
    out
}

fn write_value(v: &Value, indent: usize, out: &mut String) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                out.push_str(&i.to_string());
            } else if let Some(u) = n.as_u64() {
                out.push_str(&u.to_string());
            } else {
                let f = n.as_f64().unwrap_or(f64::NAN);
                if f.is_finite() {
                    out.push_str(&fmt_f64(f));
                } else {
                    out.push_str("null");
                }
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            // Short arrays of scalars stay on one line.
            if items.len() <= 4 && items.iter().all(|x| !x.is_array() && !x.is_object()) {
                out.push('[');
                for (i, x) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_value(x, indent, out);
                }
                out.push(']');
                return;
            }
            out.push_str("[\n");
            for (i, x) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_value(x, indent + 1, out);
                if i + 1 < items.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, k) in keys.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&Value::String((*k).clone()).to_string());
                out.push_str(": ");
                write_value(&map[*k], indent + 1, out);
                if i + 1 < keys.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}

/// Serializes any value deterministically.
pub fn deterministic<T: Serialize>(v: &T) -> Result<String> {
    Ok(to_deterministic_json(&serde_json::to_value(v)?))
}

/// Writes `contents` to `path` through a temporary file in the same
/// directory, so a failed run never leaves a partial file behind.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::Domain(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}
